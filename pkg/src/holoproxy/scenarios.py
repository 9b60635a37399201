"""Scenario files, scripted clients, and the end-to-end simulation runner.

A scenario describes one session: a cube, the participating clients, a timed
script of interactions, a network profile, and optionally a study task whose
answer the run must surface through the protocol. Everything travels as real
wire frames through the seeded virtual network into a live SessionCore; after
quiescence the runner checks convergence (every replica digest equals the
server digest) and task answers against brute-force oracles.

The file format is versioned JSON, documented in docs/scenarios.md. Bundled
scenarios live under holoproxy/data/scenarios/.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from .datacube import CellId, DataCube
from .errors import ScenarioError
from .interaction import PixelRect, ScreenConfig, default_screen
from .netsim import NetworkProfile, VirtualNetwork
from .pose import Pose
from .reducer import apply_delta, apply_snapshot
from .server import SessionCore
from .state import SessionState, state_digest
from .tasks import (
    derive_compare,
    derive_order,
    derive_range,
    oracle_compare,
    oracle_order,
    oracle_range,
)
from .wire import (
    AXES,
    CAPABILITIES,
    ROLES,
    Ack,
    AxisTap,
    ClearProjection,
    Envelope,
    ErrorReply,
    FullSnapshot,
    HapticPulse,
    Hello,
    Payload,
    PoseUpdate,
    ProjectRequest,
    StateDelta,
    SummarizeRequest,
    TapScreen,
    decode,
    encode,
)

SCENARIO_VERSION = 1

COUNTRY_NAMES = (
    "Australia",
    "Brazil",
    "Canada",
    "Denmark",
    "Estonia",
    "France",
    "Germany",
    "Hungary",
    "Iceland",
    "Japan",
    "Kenya",
    "Latvia",
)


def make_synthetic_cube(
    n_locations: int,
    n_years: int,
    seed: int,
    measure_name: str = "measure",
    measure_unit: str = "",
) -> DataCube:
    """Seeded stand-in dataset with the study's countries x years shape."""
    import random

    if not 1 <= n_locations <= len(COUNTRY_NAMES):
        raise ScenarioError(f"synthetic cubes support 1..{len(COUNTRY_NAMES)} locations")
    rng = random.Random(seed)
    locations = COUNTRY_NAMES[:n_locations]
    years = tuple(str(2000 + j) for j in range(n_years))
    values = tuple(
        tuple(round(rng.uniform(5.0, 100.0), 3) for _ in years) for _ in locations
    )
    return DataCube(
        locations=locations,
        years=years,
        values=values,
        measure_name=measure_name,
        measure_unit=measure_unit,
    )


# --- scenario model --------------------------------------------------------------------


@dataclass(frozen=True)
class ClientSpec:
    client_id: str
    role: str
    capabilities: frozenset[str] = frozenset()
    join_at_ms: float = 0.0


@dataclass(frozen=True)
class ScriptAction:
    at_ms: float
    client_id: str
    payload: Payload
    aimed_cell: CellId | None = None  # set for tap_cell actions


@dataclass(frozen=True)
class TaskSpec:
    kind: str  # range | order | compare
    axis: str | None = None
    index: int | None = None
    cells: tuple[CellId, ...] = ()
    client_id: str | None = None  # defaults to the first proxy
    expect: Any = None  # optional override, for exercising failure paths


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    cube: DataCube
    screen: ScreenConfig
    network: NetworkProfile
    clients: tuple[ClientSpec, ...]
    script: tuple[ScriptAction, ...]
    task: TaskSpec | None = None


def load_scenario(source: str | Path | dict[str, Any]) -> Scenario:
    """Load and validate a scenario from a path, bundled name, or dict."""
    if isinstance(source, dict):
        return _parse_scenario(source, origin="<dict>")
    path = Path(source)
    if not path.exists():
        bundled = _bundled_path(str(source))
        if bundled is None:
            raise FileNotFoundError(f"scenario {source!r} not found (not a file or bundled name)")
        path = bundled
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc
    return _parse_scenario(obj, origin=str(path))


def bundled_scenarios() -> list[str]:
    root = resources.files("holoproxy").joinpath("data/scenarios")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def _bundled_path(name: str) -> Path | None:
    if "/" in name or name.endswith(".json"):
        return None
    candidate = resources.files("holoproxy").joinpath(f"data/scenarios/{name}.json")
    try:
        with resources.as_file(candidate) as real:
            return real if real.exists() else None
    except FileNotFoundError:
        return None


def _parse_scenario(obj: dict[str, Any], origin: str) -> Scenario:
    def fail(msg: str) -> ScenarioError:
        return ScenarioError(f"{origin}: {msg}")

    if obj.get("version") != SCENARIO_VERSION:
        raise fail(f"unsupported scenario version {obj.get('version')!r}")
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise fail("missing scenario name")
    seed = obj.get("seed", 0)

    cube = _parse_cube(obj.get("cube"), fail)
    screen = _parse_screen(obj.get("screen"), fail)
    network = _parse_network(obj.get("network"), fail)

    clients: list[ClientSpec] = []
    for raw in obj.get("clients", []):
        cid = raw.get("id")
        role = raw.get("role")
        if not isinstance(cid, str) or not cid:
            raise fail("client missing id")
        if role not in ROLES:
            raise fail(f"client {cid}: unknown role {role!r}")
        caps = frozenset(raw.get("capabilities", []))
        if not caps <= set(CAPABILITIES):
            raise fail(f"client {cid}: unknown capabilities {sorted(caps - set(CAPABILITIES))}")
        clients.append(
            ClientSpec(cid, role, caps, float(raw.get("join_at_ms", 0.0)))
        )
    if not clients:
        raise fail("scenario needs at least one client")
    if len({c.client_id for c in clients}) != len(clients):
        raise fail("duplicate client ids")
    ids = {c.client_id for c in clients}

    script: list[ScriptAction] = []
    for k, raw in enumerate(obj.get("script", [])):
        where = f"script[{k}]"
        cid = raw.get("client")
        if cid not in ids:
            raise fail(f"{where}: unknown client {cid!r}")
        at_ms = float(raw.get("at_ms", 0.0))
        action = raw.get("action")
        if not isinstance(action, dict):
            raise fail(f"{where}: missing action")
        payload, aimed = _parse_action(action, cube, lambda m: fail(f"{where}: {m}"))
        script.append(ScriptAction(at_ms, cid, payload, aimed))
    script.sort(key=lambda a: a.at_ms)

    task = _parse_task(obj.get("task"), cube, clients, script, fail)
    return Scenario(
        name=name,
        seed=int(seed),
        cube=cube,
        screen=screen,
        network=network,
        clients=tuple(clients),
        script=tuple(script),
        task=task,
    )


def _parse_cube(raw: Any, fail) -> DataCube:
    if not isinstance(raw, dict):
        raise fail("missing cube spec")
    kind = raw.get("kind")
    if kind == "synthetic":
        return make_synthetic_cube(
            n_locations=int(raw.get("locations", 7)),
            n_years=int(raw.get("years", 10)),
            seed=int(raw.get("seed", 0)),
            measure_name=raw.get("measure", "measure"),
            measure_unit=raw.get("unit", ""),
        )
    if kind == "csv":
        path = raw.get("path")
        if not isinstance(path, str):
            raise fail("csv cube needs a path")
        from .datacube import load_dataset

        return load_dataset(Path(path).read_text(encoding="utf-8"))
    raise fail(f"unknown cube kind {kind!r}")


def _parse_screen(raw: Any, fail) -> ScreenConfig:
    if raw is None:
        return default_screen()
    if not isinstance(raw, dict):
        raise fail("screen must be an object")
    width = int(raw.get("width", 2400))
    height = int(raw.get("height", 1080))
    if "selection_area" in raw or "exploration_area" in raw:
        try:
            return ScreenConfig(
                width_px=width,
                height_px=height,
                selection_area=PixelRect(*raw["selection_area"]),
                exploration_area=PixelRect(*raw["exploration_area"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise fail(f"bad screen areas: {exc}")
    return default_screen(width, height)


def _parse_network(raw: Any, fail) -> NetworkProfile:
    if raw is None:
        return NetworkProfile()
    if not isinstance(raw, dict):
        raise fail("network must be an object")
    latency = raw.get("latency_ms", [0.0, 0.0])
    if isinstance(latency, (int, float)):
        latency = [latency, latency]
    try:
        return NetworkProfile(
            latency_ms=(float(latency[0]), float(latency[1])),
            reorder_prob=float(raw.get("reorder_prob", 0.0)),
            reorder_window_ms=float(raw.get("reorder_window_ms", 0.0)),
            dup_prob=float(raw.get("dup_prob", 0.0)),
        )
    except (ValueError, TypeError, IndexError) as exc:
        raise fail(f"bad network profile: {exc}")


def _parse_action(raw: dict[str, Any], cube: DataCube, fail) -> tuple[Payload, CellId | None]:
    kind = raw.get("kind")
    try:
        if kind == "tap_cell":
            cell = CellId(*raw["cell"])
            if not cube.in_bounds(cell):
                raise fail(f"cell {raw['cell']} out of bounds")
            return TapScreen(x=0.0, y=0.0), cell  # pixel resolved from the snapshot layout
        if kind == "tap_px":
            return TapScreen(x=float(raw["x"]), y=float(raw["y"])), None
        if kind == "axis_tap":
            payload = AxisTap(axis=raw["axis"], index=int(raw["index"]))
            _check_axis_index(cube, payload.axis, payload.index, fail)
            return payload, None
        if kind == "project":
            payload = ProjectRequest(axis=raw["axis"], index=int(raw["index"]))
            _check_axis_index(cube, payload.axis, payload.index, fail)
            return payload, None
        if kind == "summarize":
            return SummarizeRequest(), None
        if kind == "clear_projection":
            return ClearProjection(), None
        if kind == "pose":
            return (
                PoseUpdate(
                    pose=Pose(
                        position=tuple(float(c) for c in raw.get("position", (0, 0, 0))),
                        orientation=tuple(float(c) for c in raw.get("orientation", (1, 0, 0, 0))),
                    )
                ),
                None,
            )
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise fail(f"bad {kind!r} action: {exc}")
    raise fail(f"unknown action kind {kind!r}")


def _check_axis_index(cube: DataCube, axis: str, index: int, fail) -> None:
    limit = cube.n_locations if axis == "location" else cube.n_years
    if not 0 <= index < limit:
        raise fail(f"{axis} index {index} out of bounds (0..{limit - 1})")


def _parse_task(
    raw: Any, cube: DataCube, clients: list[ClientSpec], script: list[ScriptAction], fail
) -> TaskSpec | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise fail("task must be an object")
    kind = raw.get("kind")
    client_id = raw.get("client")
    if client_id is None:
        proxies = [c.client_id for c in clients if c.role == "proxy"]
        if not proxies:
            raise fail("task needs a proxy client")
        client_id = proxies[0]
    elif client_id not in {c.client_id for c in clients}:
        raise fail(f"task client {client_id!r} unknown")

    if kind in ("range", "order"):
        axis = raw.get("axis")
        if axis not in AXES:
            raise fail(f"task axis {axis!r} invalid")
        index = int(raw.get("index", -1))
        _check_axis_index(cube, axis, index, fail)
        # The script must surface the slice on the proxy display.
        projections = [
            a.payload
            for a in script
            if isinstance(a.payload, ProjectRequest) and a.client_id == client_id
        ]
        if not projections or (projections[-1].axis, projections[-1].index) != (axis, index):
            raise fail(f"{kind} task needs the script's final projection to fix {axis} {index}")
        return TaskSpec(kind=kind, axis=axis, index=index, client_id=client_id, expect=raw.get("expect"))

    if kind == "compare":
        cells_raw = raw.get("cells")
        if not isinstance(cells_raw, list) or len(cells_raw) != 3:
            raise fail("compare task needs exactly three cells")
        cells = tuple(CellId(*c) for c in cells_raw)
        for cell in cells:
            if not cube.in_bounds(cell):
                raise fail(f"compare cell {cell} out of bounds")
        if len(set(cells)) != 3:
            raise fail("compare cells must be distinct")
        tapped = {a.aimed_cell for a in script if a.client_id == client_id and a.aimed_cell}
        if not set(cells) <= tapped:
            raise fail("compare task requires the task client to tap all three cells")
        for action in script:
            if isinstance(action.payload, TapScreen):
                # Haptic pulses carry no cell id; they are matched to taps by
                # per-connection order, which needs all taps to be the task
                # client's aimed tap_cell actions.
                if action.client_id != client_id:
                    raise fail("compare task allows taps only from the task client")
                if action.aimed_cell is None:
                    raise fail("compare task requires tap_cell actions, not tap_px")
        return TaskSpec(kind=kind, cells=cells, client_id=client_id, expect=raw.get("expect"))

    raise fail(f"unknown task kind {kind!r}")


# --- simulation clients -------------------------------------------------------------------


class SimClient:
    """Scripted client: sends real frames, maintains a replica, tracks haptics
    and acknowledgement round-trips."""

    def __init__(self, spec: ClientSpec, net: VirtualNetwork, runner: "ScenarioRunner"):
        self.spec = spec
        self.net = net
        self.runner = runner
        self.seq = 0
        self.replica: SessionState | None = None
        self.snapshot: FullSnapshot | None = None
        self.server_watermark = 0
        self.pending: list[ScriptAction] = []  # actions waiting for the snapshot
        self.sent_at: dict[int, float] = {}
        self.ack_rtts: list[float] = []
        self.pending_tap_cells: list[CellId] = []  # send order; pulses consume
        self.last_amplitude: dict[CellId, float] = {}
        self.errors: list[ErrorReply] = []
        self.frames_received = 0
        self.duplicates_skipped = 0

    @property
    def client_id(self) -> str:
        return self.spec.client_id

    def join(self) -> None:
        self._send(Hello(role=self.spec.role, capabilities=self.spec.capabilities))

    def _send(self, payload: Payload) -> None:
        self.seq += 1
        env = Envelope(self.runner.session_id, self.client_id, self.seq, payload)
        self.sent_at[self.seq] = self.net.now
        self.runner.client_to_server(self, env)

    def perform(self, action: ScriptAction) -> None:
        if self.replica is None:
            self.pending.append(action)
            return
        payload = action.payload
        if action.aimed_cell is not None:
            payload = self._tap_for_cell(action.aimed_cell)
            self.pending_tap_cells.append(action.aimed_cell)
        self._send(payload)

    def _tap_for_cell(self, cell: CellId) -> TapScreen:
        # Geometry comes from the synchronized snapshot, not local layout logic.
        assert self.snapshot is not None
        rect = self.snapshot.layout.rect(cell)
        area = self.snapshot.screen.selection_area
        return TapScreen(
            x=area.x + (rect.x0 + rect.x1) / 2 * area.width,
            y=area.y + (rect.y0 + rect.y1) / 2 * area.height,
        )

    def on_frame(self, env: Envelope) -> None:
        self.frames_received += 1
        if env.seq <= self.server_watermark:
            self.duplicates_skipped += 1
            return
        self.server_watermark = env.seq
        payload = env.payload
        if isinstance(payload, FullSnapshot):
            self.snapshot = payload
            self.replica = apply_snapshot(payload)
            pending, self.pending = self.pending, []
            for action in pending:
                self.perform(action)
        elif isinstance(payload, StateDelta):
            if self.replica is not None:
                self.replica = apply_delta(self.replica, payload)
        elif isinstance(payload, Ack):
            sent = self.sent_at.pop(payload.seq, None)
            if sent is not None:
                self.ack_rtts.append(self.net.now - sent)
        elif isinstance(payload, HapticPulse):
            if self.pending_tap_cells:
                cell = self.pending_tap_cells.pop(0)
                self.last_amplitude[cell] = payload.command.amplitude
        elif isinstance(payload, ErrorReply):
            self.errors.append(payload)

    def digest(self) -> str | None:
        return None if self.replica is None else state_digest(self.replica)


# --- runner -----------------------------------------------------------------------------


@dataclass
class TaskResult:
    kind: str
    derived: Any
    oracle: Any
    passed: bool
    detail: str = ""


@dataclass
class ScenarioReport:
    name: str
    seed: int
    cube_digest: str
    server_digest: str
    client_digests: dict[str, str | None]
    converged: bool
    applied_count: int
    frames_sent: int
    frames_delivered: int
    frames_duplicated: int
    duplicates_skipped: int
    server_errors: int
    ack_rtts_ms: list[float]
    sim_duration_ms: float
    task: TaskResult | None
    assertions: list[tuple[str, bool, str]]
    wall_ms: float = 0.0  # excluded from determinism comparisons

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.assertions)


class ScenarioRunner:
    """Executes one scenario through real frames over the virtual network."""

    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.session_id = f"sim-{scenario.name}"
        self.net = VirtualNetwork(scenario.network, seed=self.seed)
        self.core = SessionCore(self.session_id, scenario.cube, scenario.screen)
        self.clients = {spec.client_id: SimClient(spec, self.net, self) for spec in scenario.clients}

    # Frames cross the codec both ways so the run exercises the real protocol.
    def client_to_server(self, client: SimClient, env: Envelope) -> None:
        frame = encode(env)
        self.net.send(f"{client.client_id}->server", frame, self._deliver_to_server)

    def _deliver_to_server(self, frame: bytes, sent_at: float) -> None:
        env = decode(frame)
        if isinstance(env.payload, Hello):
            self.core.register(
                env.client_id, env.payload.role, env.payload.capabilities
            )
        for cid, out_env in self.core.handle(env):
            client = self.clients.get(cid)
            if client is not None:
                self.net.send(f"server->{cid}", encode(out_env), self._make_client_sink(client))

    def _make_client_sink(self, client: SimClient):
        def deliver(frame: bytes, sent_at: float) -> None:
            client.on_frame(decode(frame))

        return deliver

    def run(self) -> ScenarioReport:
        started = time.perf_counter()
        for spec in self.scenario.clients:
            client = self.clients[spec.client_id]
            self.net.at(spec.join_at_ms, client.join)
        for action in self.scenario.script:
            client = self.clients[action.client_id]
            self.net.at(action.at_ms, lambda c=client, a=action: c.perform(a))
        duration = self.net.run()
        report = self._evaluate(duration)
        report.wall_ms = (time.perf_counter() - started) * 1000.0
        return report

    def _evaluate(self, duration: float) -> ScenarioReport:
        assertions: list[tuple[str, bool, str]] = []
        server_digest = self.core.digest()
        client_digests = {cid: c.digest() for cid, c in self.clients.items()}
        converged = all(d == server_digest for d in client_digests.values())
        assertions.append(
            (
                "convergence",
                converged,
                "all client digests equal the server digest"
                if converged
                else f"server {server_digest[:12]} vs {client_digests}",
            )
        )
        server_errors = sum(len(c.errors) for c in self.clients.values())
        assertions.append(
            ("no_errors", server_errors == 0, f"{server_errors} error replies received")
        )

        task_result = None
        if self.scenario.task is not None:
            task_result = self._evaluate_task(self.scenario.task)
            assertions.append((f"task_{task_result.kind}", task_result.passed, task_result.detail))

        ack_rtts = sorted(
            rtt for c in self.clients.values() for rtt in c.ack_rtts
        )
        return ScenarioReport(
            name=self.scenario.name,
            seed=self.seed,
            cube_digest=self.scenario.cube.digest(),
            server_digest=server_digest,
            client_digests=client_digests,
            converged=converged,
            applied_count=self.core.applied_count,
            frames_sent=self.net.frames_sent,
            frames_delivered=self.net.frames_delivered,
            frames_duplicated=self.net.frames_duplicated,
            duplicates_skipped=sum(c.duplicates_skipped for c in self.clients.values()),
            server_errors=server_errors,
            ack_rtts_ms=ack_rtts,
            sim_duration_ms=duration,
            task=task_result,
            assertions=assertions,
        )

    def _evaluate_task(self, task: TaskSpec) -> TaskResult:
        cube = self.scenario.cube
        client = self.clients[task.client_id]
        if task.kind in ("range", "order"):
            projection = client.replica.projection if client.replica else None
            if projection is None or (projection.series_axis, projection.fixed_index) != (
                task.axis,
                task.index,
            ):
                return TaskResult(task.kind, None, None, False, "projection not synchronized")
            if task.kind == "range":
                derived = derive_range(projection)
                oracle = oracle_range(cube, task.axis, task.index)
            else:
                derived = derive_order(projection)
                oracle = oracle_order(cube, task.axis, task.index)
        else:
            missing = [c for c in task.cells if c not in client.last_amplitude]
            if missing:
                return TaskResult(task.kind, None, None, False, f"no haptic reading for {missing}")
            readings = {c: client.last_amplitude[c] for c in task.cells}
            derived = derive_compare(readings)
            oracle = oracle_compare(cube, task.cells)

        expected = oracle if task.expect is None else _parse_expected(task.kind, task.expect)
        passed = derived == oracle and oracle == expected
        detail = f"derived={_fmt_answer(derived)} oracle={_fmt_answer(oracle)}"
        if task.expect is not None:
            detail += f" expected={_fmt_answer(expected)}"
        return TaskResult(task.kind, derived, oracle, passed, detail)


def _parse_expected(kind: str, raw: Any) -> Any:
    if kind == "range":
        return (CellId(*raw[0]), CellId(*raw[1]))
    if kind == "order":
        return [CellId(*c) for c in raw]
    return CellId(*raw)


def _fmt_answer(answer: Any) -> str:
    if isinstance(answer, CellId):
        return f"({answer.location},{answer.year})"
    if isinstance(answer, (tuple, list)):
        return "[" + ",".join(_fmt_answer(a) for a in answer) + "]"
    return str(answer)


def run_scenario(
    source: str | Path | dict[str, Any] | Scenario, seed: int | None = None
) -> ScenarioReport:
    scenario = source if isinstance(source, Scenario) else load_scenario(source)
    return ScenarioRunner(scenario, seed=seed).run()
