"""Scenario report rendering: delimited text, JSON, and latency figures.

The text form is tab-delimited key/value lines grouped in sections, stable
across runs for a fixed seed except the wall-clock line. With an output
directory the same report is written to disk alongside a latency histogram
rendered to PNG.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .scenarios import ScenarioReport


def _percentile(sorted_samples: list[float], q: float) -> float:
    if not sorted_samples:
        return 0.0
    if len(sorted_samples) == 1:
        return sorted_samples[0]
    pos = q * (len(sorted_samples) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(sorted_samples) - 1)
    frac = pos - lo
    return sorted_samples[lo] * (1 - frac) + sorted_samples[hi] * frac


def latency_stats(report: ScenarioReport) -> dict[str, float]:
    samples = report.ack_rtts_ms
    if not samples:
        return {"count": 0, "mean": 0.0, "p50": 0.0, "p99": 0.0, "max": 0.0}
    return {
        "count": len(samples),
        "mean": sum(samples) / len(samples),
        "p50": _percentile(samples, 0.50),
        "p99": _percentile(samples, 0.99),
        "max": samples[-1],
    }


def latency_histogram(report: ScenarioReport, bucket_ms: float = 10.0) -> list[tuple[float, int]]:
    """(bucket lower edge, count) pairs covering all samples."""
    if not report.ack_rtts_ms:
        return []
    top = report.ack_rtts_ms[-1]
    n_buckets = int(top // bucket_ms) + 1
    counts = [0] * n_buckets
    for rtt in report.ack_rtts_ms:
        counts[min(int(rtt // bucket_ms), n_buckets - 1)] += 1
    return [(k * bucket_ms, counts[k]) for k in range(n_buckets)]


def render_text(report: ScenarioReport, include_wall_clock: bool = True) -> str:
    lines: list[str] = []
    add = lines.append
    add(f"scenario\t{report.name}")
    add(f"seed\t{report.seed}")
    add(f"cube_digest\t{report.cube_digest}")
    add(f"result\t{'PASS' if report.passed else 'FAIL'}")
    add("")
    add("[digests]")
    add(f"server\t{report.server_digest}")
    for cid in sorted(report.client_digests):
        digest = report.client_digests[cid]
        add(f"client.{cid}\t{digest if digest is not None else '(never joined)'}")
    add(f"converged\t{str(report.converged).lower()}")
    add("")
    add("[messages]")
    add(f"applied\t{report.applied_count}")
    add(f"frames_sent\t{report.frames_sent}")
    add(f"frames_delivered\t{report.frames_delivered}")
    add(f"frames_duplicated\t{report.frames_duplicated}")
    add(f"duplicates_skipped\t{report.duplicates_skipped}")
    add(f"error_replies\t{report.server_errors}")
    add("")
    add("[latency_ms]")
    for key, value in latency_stats(report).items():
        add(f"{key}\t{value:.3f}" if isinstance(value, float) else f"{key}\t{value}")
    for edge, count in latency_histogram(report):
        add(f"bucket[{edge:g},{edge + 10:g})\t{count}")
    add(f"sim_duration\t{report.sim_duration_ms:.3f}")
    add("")
    add("[assertions]")
    for name, ok, detail in report.assertions:
        add(f"{name}\t{'pass' if ok else 'fail'}\t{detail}")
    if report.task is not None:
        add("")
        add("[task]")
        add(f"kind\t{report.task.kind}")
        add(f"passed\t{str(report.task.passed).lower()}")
        add(f"detail\t{report.task.detail}")
    if include_wall_clock:
        add("")
        add(f"wall_ms\t{report.wall_ms:.3f}")
    return "\n".join(lines) + "\n"


def render_json(report: ScenarioReport, include_wall_clock: bool = True) -> str:
    obj: dict[str, Any] = {
        "scenario": report.name,
        "seed": report.seed,
        "cube_digest": report.cube_digest,
        "result": "PASS" if report.passed else "FAIL",
        "server_digest": report.server_digest,
        "client_digests": dict(sorted(report.client_digests.items())),
        "converged": report.converged,
        "messages": {
            "applied": report.applied_count,
            "frames_sent": report.frames_sent,
            "frames_delivered": report.frames_delivered,
            "frames_duplicated": report.frames_duplicated,
            "duplicates_skipped": report.duplicates_skipped,
            "error_replies": report.server_errors,
        },
        "latency_ms": latency_stats(report),
        "latency_histogram": [[edge, count] for edge, count in latency_histogram(report)],
        "sim_duration_ms": report.sim_duration_ms,
        "assertions": [
            {"name": name, "passed": ok, "detail": detail} for name, ok, detail in report.assertions
        ],
        "task": None
        if report.task is None
        else {"kind": report.task.kind, "passed": report.task.passed, "detail": report.task.detail},
    }
    if include_wall_clock:
        obj["wall_ms"] = report.wall_ms
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def save_latency_figure(report: ScenarioReport, path: str | Path) -> Path:
    """Render the acknowledgement round-trip histogram to an image file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    if report.ack_rtts_ms:
        buckets = latency_histogram(report)
        edges = [edge for edge, _ in buckets]
        counts = [count for _, count in buckets]
        ax.bar(edges, counts, width=9.0, align="edge", color="#4878a8", edgecolor="black")
        stats = latency_stats(report)
        ax.axvline(stats["p50"], color="#c44e52", linestyle="--", linewidth=1, label="p50")
        ax.axvline(stats["p99"], color="#55a868", linestyle=":", linewidth=1, label="p99")
        ax.legend(frameon=False)
    else:
        ax.text(0.5, 0.5, "no samples", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("ack round-trip (ms)")
    ax.set_ylabel("messages")
    ax.set_title(f"{report.name} (seed {report.seed})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def write_report(report: ScenarioReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.txt, report.json, and latency_hist.png under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "text": out / "report.txt",
        "json": out / "report.json",
        "figure": out / "latency_hist.png",
    }
    paths["text"].write_text(render_text(report), encoding="utf-8")
    paths["json"].write_text(render_json(report), encoding="utf-8")
    save_latency_figure(report, paths["figure"])
    return paths
