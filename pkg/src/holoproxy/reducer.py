"""Deterministic state reducer for session synchronization.

reduce() is the single authority: every inbound envelope maps to (successor
state, outbound messages). Duplicate and stale envelopes (seq at or below the
sender's applied watermark) are acknowledged without re-applying, so delivery
may be at-least-once. The watermark advances only when an envelope actually
mutates shared state; envelopes that validly produce no transition (a tap
outside the chart, a pose update superseded under last-writer-wins, a request
recomputing an identical value) are acknowledged and may be re-evaluated
harmlessly on redelivery.

Callers must serialize reductions per session (single writer); distinct
sessions are independent. Everything here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .datacube import ChartLayout, DataCube, summarize
from .errors import OutOfBoundsIndex
from .interaction import (
    ScreenConfig,
    SelectionState,
    axis_select,
    haptic_encode,
    hit_test_mark,
    project_series,
    toggle_select,
)
from .state import SessionState, canonical_state_text, state_digest
from .wire import (
    Ack,
    AxisTap,
    Change,
    ClearProjection,
    Envelope,
    ErrorReply,
    FullSnapshot,
    HapticPulse,
    Hello,
    Payload,
    Ping,
    PoseChange,
    PoseUpdate,
    Pong,
    ProjectionChange,
    ProjectRequest,
    SelectionChange,
    StateDelta,
    SummarizeRequest,
    SummaryChange,
    TapScreen,
)

# Outbound addressing: the hub resolves these against its connection registry.
TO_BROADCAST = "broadcast"
TO_SENDER = "sender"
TO_PROXIES = "proxies"

_coherence_checks = False


def set_coherence_checks(enabled: bool) -> None:
    """Enable re-derivation checks after every reduce (test builds)."""
    global _coherence_checks
    _coherence_checks = enabled


@dataclass(frozen=True)
class Outbound:
    to: str
    payload: Payload


@dataclass(frozen=True)
class ReduceResult:
    state: SessionState
    outbound: tuple[Outbound, ...]
    applied: bool  # True iff the envelope mutated shared state


def reduce(
    state: SessionState,
    env: Envelope,
    cube: DataCube,
    layout: ChartLayout,
    screen: ScreenConfig,
) -> ReduceResult:
    result = _reduce(state, env, cube, layout, screen)
    if _coherence_checks:
        _check_coherence(result.state, cube)
    return result


def _reduce(
    state: SessionState,
    env: Envelope,
    cube: DataCube,
    layout: ChartLayout,
    screen: ScreenConfig,
) -> ReduceResult:
    payload = env.payload

    if isinstance(payload, Hello):
        snapshot = FullSnapshot(state=state, cube=cube, layout=layout, screen=screen)
        return ReduceResult(state, (Outbound(TO_SENDER, snapshot),), applied=False)

    if isinstance(payload, Ping):
        return ReduceResult(state, (Outbound(TO_SENDER, Pong()),), applied=False)
    if isinstance(payload, Pong):
        return ReduceResult(state, (), applied=False)

    if env.seq <= state.watermark_of(env.client_id):
        # Duplicate or stale: already applied, just re-acknowledge.
        return ReduceResult(state, (Outbound(TO_SENDER, Ack(env.seq)),), applied=False)

    if isinstance(payload, TapScreen):
        return _reduce_tap(state, env, cube, layout, screen)
    if isinstance(payload, AxisTap):
        return _reduce_axis_tap(state, env, cube)
    if isinstance(payload, PoseUpdate):
        return _reduce_pose(state, env)
    if isinstance(payload, SummarizeRequest):
        return _reduce_summarize(state, env, cube)
    if isinstance(payload, ProjectRequest):
        return _reduce_project(state, env, cube)
    if isinstance(payload, ClearProjection):
        return _reduce_clear_projection(state, env)

    # Server-originated payload arriving inbound: reject to the sender only.
    return _error(state, env, "unexpected_payload", f"clients may not send {payload.TAG}")


def _ack(env: Envelope) -> Outbound:
    return Outbound(TO_SENDER, Ack(env.seq))


def _error(state: SessionState, env: Envelope, code: str, detail: str) -> ReduceResult:
    reply = ErrorReply(code=code, detail=detail, seq=env.seq)
    return ReduceResult(state, (Outbound(TO_SENDER, reply),), applied=False)


def _selection_changes(
    state: SessionState, new_selection: frozenset, cube: DataCube
) -> tuple[SessionState, list[Change]]:
    changes: list[Change] = [SelectionChange(cells=tuple(sorted(new_selection)))]
    new_state = replace(state, selection=new_selection)
    # An active summary panel tracks the live selection.
    if state.summary is not None:
        stats = summarize(cube, new_selection)
        if stats != state.summary:
            new_state = replace(new_state, summary=stats)
            changes.append(SummaryChange(stats=stats))
    return new_state, changes


def _commit(
    state: SessionState,
    env: Envelope,
    changes: list[Change],
    extra: tuple[Outbound, ...] = (),
) -> ReduceResult:
    new_state = state.with_watermark(env.client_id, env.seq)
    delta = StateDelta(cause=(env.client_id, env.seq), changes=tuple(changes))
    outbound = (Outbound(TO_BROADCAST, delta),) + extra + (_ack(env),)
    return ReduceResult(new_state, outbound, applied=True)


def _reduce_tap(
    state: SessionState,
    env: Envelope,
    cube: DataCube,
    layout: ChartLayout,
    screen: ScreenConfig,
) -> ReduceResult:
    tap: TapScreen = env.payload  # type: ignore[assignment]
    cell = hit_test_mark((tap.x, tap.y), layout, screen)
    if cell is None:
        return ReduceResult(state, (_ack(env),), applied=False)
    selection = toggle_select(SelectionState(state.selection), cube, cell).selected
    new_state, changes = _selection_changes(state, selection, cube)

    extra: tuple[Outbound, ...] = ()
    lo, hi = cube.value_range()
    if hi > lo:
        pulse = HapticPulse(command=haptic_encode(cube.value(cell), (lo, hi)))
        extra = (Outbound(TO_PROXIES, pulse),)
    return _commit(new_state, env, changes, extra)


def _reduce_axis_tap(state: SessionState, env: Envelope, cube: DataCube) -> ReduceResult:
    tap: AxisTap = env.payload  # type: ignore[assignment]
    try:
        selection = axis_select(
            SelectionState(state.selection), cube, tap.axis, tap.index  # type: ignore[arg-type]
        ).selected
    except OutOfBoundsIndex as exc:
        return _error(state, env, "out_of_bounds_index", str(exc))
    new_state, changes = _selection_changes(state, selection, cube)
    return _commit(new_state, env, changes)


def _reduce_pose(state: SessionState, env: Envelope) -> ReduceResult:
    update: PoseUpdate = env.payload  # type: ignore[assignment]
    key = (env.seq, env.client_id)
    if state.pose_writer is not None and key <= state.pose_writer:
        # Superseded under last-writer-wins; acknowledged, no transition.
        return ReduceResult(state, (_ack(env),), applied=False)
    new_state = replace(state, pose=update.pose, pose_writer=key)
    return _commit(new_state, env, [PoseChange(pose=update.pose, writer=key)])


def _reduce_summarize(state: SessionState, env: Envelope, cube: DataCube) -> ReduceResult:
    stats = summarize(cube, state.selection)
    if stats == state.summary:
        return ReduceResult(state, (_ack(env),), applied=False)
    new_state = replace(state, summary=stats)
    return _commit(new_state, env, [SummaryChange(stats=stats)])


def _reduce_project(state: SessionState, env: Envelope, cube: DataCube) -> ReduceResult:
    req: ProjectRequest = env.payload  # type: ignore[assignment]
    try:
        projection = project_series(cube, req.axis, req.index)  # type: ignore[arg-type]
    except OutOfBoundsIndex as exc:
        return _error(state, env, "out_of_bounds_index", str(exc))
    if projection == state.projection:
        return ReduceResult(state, (_ack(env),), applied=False)
    new_state = replace(state, projection=projection)
    return _commit(new_state, env, [ProjectionChange(projection=projection)])


def _reduce_clear_projection(state: SessionState, env: Envelope) -> ReduceResult:
    if state.projection is None:
        return ReduceResult(state, (_ack(env),), applied=False)
    new_state = replace(state, projection=None)
    return _commit(new_state, env, [ProjectionChange(projection=None)])


# --- replica side -----------------------------------------------------------------


def apply_snapshot(snapshot: FullSnapshot) -> SessionState:
    return snapshot.state


def apply_delta(state: SessionState, delta: StateDelta) -> SessionState:
    """Fold one broadcast delta into a client replica."""
    for change in delta.changes:
        if isinstance(change, SelectionChange):
            state = replace(state, selection=frozenset(change.cells))
        elif isinstance(change, PoseChange):
            state = replace(state, pose=change.pose, pose_writer=change.writer)
        elif isinstance(change, ProjectionChange):
            state = replace(state, projection=change.projection)
        elif isinstance(change, SummaryChange):
            state = replace(state, summary=change.stats)
        else:  # pragma: no cover - exhaustive over Change
            raise TypeError(f"unknown change {change!r}")
    client, seq = delta.cause
    return state.with_watermark(client, seq)


# --- invariant checks ----------------------------------------------------------------


def _check_coherence(state: SessionState, cube: DataCube) -> None:
    """Stored derived state must equal recomputation from its inputs."""
    if state.projection is not None:
        fresh = project_series(cube, state.projection.series_axis, state.projection.fixed_index)
        if canonical_state_text(replace(state, projection=fresh)) != canonical_state_text(state):
            raise AssertionError("stored projection diverged from re-derivation")
    if state.summary is not None:
        fresh_stats = summarize(cube, state.selection)
        if canonical_state_text(replace(state, summary=fresh_stats)) != canonical_state_text(state):
            raise AssertionError("stored summary diverged from re-derivation")
    if state.pose_writer is not None:
        seq, client = state.pose_writer
        if seq > state.watermark_of(client):
            raise AssertionError("pose writer seq above its client watermark")


__all__ = [
    "Outbound",
    "ReduceResult",
    "TO_BROADCAST",
    "TO_PROXIES",
    "TO_SENDER",
    "apply_delta",
    "apply_snapshot",
    "reduce",
    "set_coherence_checks",
    "state_digest",
]
