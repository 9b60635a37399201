"""Authoritative shared session state and its canonical digest.

The digest covers the replicated content every client must agree on:
cube identity, selection set, proxy pose with its last writer, and the active
projection/summary. Per-client delivery watermarks are transport bookkeeping
kept alongside for deduplication; they are excluded from the digest so that
replicas which never see each other's acknowledgement traffic can still prove
convergence, and so that replaying a message set in any delivery order hashes
identically once the replicated content agrees.

Canonical bytes are compact JSON with fixed key order; every float is
rendered as its big-endian IEEE-754 hex so any language produces identical
bytes (decimal shortest-round-trip formatting differs between runtimes).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, replace
from typing import Any

from .datacube import CellId, DataCube, SummaryStats
from .interaction import Projection2D
from .pose import IDENTITY_POSE, Pose

# (seq, client_id): compared lexicographically for last-writer-wins.
PoseWriter = tuple[int, str]


def float_hex(x: float) -> str:
    return struct.pack(">d", float(x)).hex()


def float_unhex(s: str) -> float:
    return struct.unpack(">d", bytes.fromhex(s))[0]


@dataclass(frozen=True)
class SessionState:
    """Immutable snapshot of one session's shared state."""

    cube_digest: str
    selection: frozenset[CellId] = frozenset()
    pose: Pose = IDENTITY_POSE
    pose_writer: PoseWriter | None = None
    projection: Projection2D | None = None
    summary: SummaryStats | None = None
    watermarks: tuple[tuple[str, int], ...] = ()  # sorted by client id

    def watermark_of(self, client_id: str) -> int:
        for cid, seq in self.watermarks:
            if cid == client_id:
                return seq
        return 0

    def with_watermark(self, client_id: str, seq: int) -> "SessionState":
        entries = dict(self.watermarks)
        entries[client_id] = seq
        return replace(self, watermarks=tuple(sorted(entries.items())))


def initial_state(cube: DataCube) -> SessionState:
    return SessionState(cube_digest=cube.digest())


def canonical_state_text(state: SessionState) -> str:
    """Deterministic text form of the replicated state (digest input)."""
    obj: dict[str, Any] = {
        "cube": state.cube_digest,
        "selection": [c.as_list() for c in sorted(state.selection)],
        "pose": {
            "p": [float_hex(c) for c in state.pose.position],
            "q": [float_hex(c) for c in state.pose.orientation],
        },
        "writer": list(state.pose_writer) if state.pose_writer is not None else None,
        "projection": _projection_canonical(state.projection),
        "summary": _summary_canonical(state.summary),
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _projection_canonical(proj: Projection2D | None) -> dict[str, Any] | None:
    if proj is None:
        return None
    return {
        "axis": proj.series_axis,
        "index": proj.fixed_index,
        "labels": list(proj.labels),
        "values": [float_hex(v) for v in proj.values],
        "range": [float_hex(proj.value_range[0]), float_hex(proj.value_range[1])],
    }


def _summary_canonical(stats: SummaryStats | None) -> dict[str, Any] | None:
    if stats is None:
        return None
    opt = lambda v: None if v is None else float_hex(v)
    return {
        "count": stats.count,
        "min": opt(stats.min),
        "max": opt(stats.max),
        "mean": opt(stats.mean),
        "sum": float_hex(stats.sum),
    }


def state_digest(state: SessionState) -> str:
    """SHA-256 hex digest of the canonical state bytes."""
    return hashlib.sha256(canonical_state_text(state).encode("utf-8")).hexdigest()
