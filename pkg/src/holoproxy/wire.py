"""Framed wire protocol between clients and the session server.

One message = one UTF-8 text frame: compact JSON terminated by a single
newline, fields in the canonical order documented in docs/protocol.md.
Text frames keep the emulator and replay logs debuggable; golden fixtures in
tests/fixtures pin the byte format.

decode() is strict: unknown keys, missing fields, wrong types, out-of-range
values, and unknown payload tags are all rejected rather than guessed at.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable, ClassVar

from .datacube import CellId, ChartLayout, DataCube, Rect, SummaryStats
from .errors import (
    IncompleteFrame,
    MalformedFrame,
    UnknownPayloadTag,
    UnsupportedVersion,
)
from .interaction import (
    MAX_PULSE_MS,
    HapticCommand,
    PixelRect,
    Projection2D,
    ScreenConfig,
)
from .pose import Pose
from .state import SessionState

PROTOCOL_VERSION = 1

ROLES = ("proxy", "renderer", "observer")
CAPABILITIES = ("precise_input", "vibrotactile", "high_res_display", "spatial_display", "stereo")
AXES = ("location", "year")

# Reserved client id for server-originated envelopes.
SERVER_CLIENT_ID = "server"


# --- payload types -------------------------------------------------------------


@dataclass(frozen=True)
class Payload:
    TAG: ClassVar[str] = ""

    def to_obj(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Hello(Payload):
    TAG: ClassVar[str] = "hello"
    role: str
    capabilities: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        unknown = set(self.capabilities) - set(CAPABILITIES)
        if unknown:
            raise ValueError(f"unknown capabilities {sorted(unknown)}")

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG, "role": self.role, "capabilities": sorted(self.capabilities)}


@dataclass(frozen=True)
class TapScreen(Payload):
    TAG: ClassVar[str] = "tap_screen"
    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("tap point must be finite")

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG, "x": self.x, "y": self.y}


@dataclass(frozen=True)
class AxisTap(Payload):
    TAG: ClassVar[str] = "axis_tap"
    axis: str
    index: int

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG, "axis": self.axis, "index": self.index}


@dataclass(frozen=True)
class PoseUpdate(Payload):
    TAG: ClassVar[str] = "pose_update"
    pose: Pose

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG, **_pose_obj(self.pose)}


@dataclass(frozen=True)
class ProjectRequest(Payload):
    TAG: ClassVar[str] = "project_request"
    axis: str
    index: int

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG, "axis": self.axis, "index": self.index}


@dataclass(frozen=True)
class SummarizeRequest(Payload):
    TAG: ClassVar[str] = "summarize_request"

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG}


@dataclass(frozen=True)
class ClearProjection(Payload):
    TAG: ClassVar[str] = "clear_projection"

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG}


@dataclass(frozen=True)
class HapticPulse(Payload):
    TAG: ClassVar[str] = "haptic_pulse"
    command: HapticCommand

    def to_obj(self) -> dict[str, Any]:
        return {
            "type": self.TAG,
            "amplitude": self.command.amplitude,
            "duration_ms": self.command.duration_ms,
        }


@dataclass(frozen=True)
class Ack(Payload):
    TAG: ClassVar[str] = "ack"
    seq: int

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG, "seq": self.seq}


@dataclass(frozen=True)
class ErrorReply(Payload):
    """Unicast rejection of one envelope; the shared state did not change."""

    TAG: ClassVar[str] = "error"
    code: str
    detail: str
    seq: int

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG, "code": self.code, "detail": self.detail, "seq": self.seq}


@dataclass(frozen=True)
class Ping(Payload):
    TAG: ClassVar[str] = "ping"

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG}


@dataclass(frozen=True)
class Pong(Payload):
    TAG: ClassVar[str] = "pong"

    def to_obj(self) -> dict[str, Any]:
        return {"type": self.TAG}


# --- state deltas ----------------------------------------------------------------


@dataclass(frozen=True)
class SelectionChange:
    FIELD: ClassVar[str] = "selection"
    cells: tuple[CellId, ...]  # full new selection, sorted

    def to_obj(self) -> dict[str, Any]:
        return {"field": self.FIELD, "cells": [c.as_list() for c in self.cells]}


@dataclass(frozen=True)
class PoseChange:
    FIELD: ClassVar[str] = "pose"
    pose: Pose
    writer: tuple[int, str]

    def to_obj(self) -> dict[str, Any]:
        return {
            "field": self.FIELD,
            "pose": _pose_obj(self.pose),
            "writer": {"seq": self.writer[0], "client": self.writer[1]},
        }


@dataclass(frozen=True)
class ProjectionChange:
    FIELD: ClassVar[str] = "projection"
    projection: Projection2D | None

    def to_obj(self) -> dict[str, Any]:
        return {"field": self.FIELD, "projection": _projection_obj(self.projection)}


@dataclass(frozen=True)
class SummaryChange:
    FIELD: ClassVar[str] = "summary"
    stats: SummaryStats | None

    def to_obj(self) -> dict[str, Any]:
        return {"field": self.FIELD, "stats": _summary_obj(self.stats)}


Change = SelectionChange | PoseChange | ProjectionChange | SummaryChange


@dataclass(frozen=True)
class StateDelta(Payload):
    TAG: ClassVar[str] = "state_delta"
    cause: tuple[str, int]  # (client_id, seq) of the applied envelope
    changes: tuple[Change, ...] = ()

    def to_obj(self) -> dict[str, Any]:
        return {
            "type": self.TAG,
            "cause": {"client": self.cause[0], "seq": self.cause[1]},
            "changes": [c.to_obj() for c in self.changes],
        }


@dataclass(frozen=True)
class FullSnapshot(Payload):
    """Complete session context for a joining client: shared state plus the
    dataset, layout, and screen partition it was computed from, so thin
    clients need no out-of-band channel."""

    TAG: ClassVar[str] = "full_snapshot"
    state: SessionState
    cube: DataCube
    layout: ChartLayout
    screen: ScreenConfig

    def to_obj(self) -> dict[str, Any]:
        return {
            "type": self.TAG,
            "state": _state_obj(self.state),
            "cube": _cube_obj(self.cube),
            "layout": _layout_obj(self.layout),
            "screen": _screen_obj(self.screen),
        }


_PAYLOAD_TYPES: tuple[type[Payload], ...] = (
    Hello,
    TapScreen,
    AxisTap,
    PoseUpdate,
    ProjectRequest,
    SummarizeRequest,
    ClearProjection,
    HapticPulse,
    Ack,
    ErrorReply,
    Ping,
    Pong,
    StateDelta,
    FullSnapshot,
)
_TAGS = {cls.TAG: cls for cls in _PAYLOAD_TYPES}


# --- envelope ---------------------------------------------------------------------


@dataclass(frozen=True)
class Envelope:
    session_id: str
    client_id: str
    seq: int
    payload: Payload
    protocol_version: int = PROTOCOL_VERSION

    def __post_init__(self) -> None:
        for name, token in (("session_id", self.session_id), ("client_id", self.client_id)):
            if not token or len(token) > 128 or "\n" in token or "\r" in token:
                raise ValueError(f"invalid {name}: {token!r}")
        if not isinstance(self.seq, int) or self.seq < 1:
            raise ValueError(f"seq must be a positive integer, got {self.seq!r}")


def encode(env: Envelope) -> bytes:
    """One canonical frame: compact JSON, fixed field order, newline-terminated."""
    obj = {
        "v": env.protocol_version,
        "session": env.session_id,
        "client": env.client_id,
        "seq": env.seq,
        "payload": env.payload.to_obj(),
    }
    return (json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False) + "\n").encode(
        "utf-8"
    )


def decode(frame: bytes) -> Envelope:
    """Inverse of encode on valid frames; strict about structure."""
    if not frame.endswith(b"\n"):
        raise IncompleteFrame("frame missing newline terminator")
    body = frame[:-1]
    if b"\n" in body:
        raise MalformedFrame("frame contains more than one line")
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFrame(f"frame is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedFrame("frame must be a JSON object")
    _require_keys(obj, {"v", "session", "client", "seq", "payload"})
    version = obj["v"]
    if not isinstance(version, int):
        raise MalformedFrame("version must be an integer")
    if version != PROTOCOL_VERSION:
        raise UnsupportedVersion(f"protocol version {version} not supported")
    session = _expect_str(obj, "session")
    client = _expect_str(obj, "client")
    seq = _expect_int(obj, "seq")
    payload_obj = obj["payload"]
    if not isinstance(payload_obj, dict):
        raise MalformedFrame("payload must be a JSON object")
    payload = _decode_payload(payload_obj)
    try:
        return Envelope(session_id=session, client_id=client, seq=seq, payload=payload)
    except ValueError as exc:
        raise MalformedFrame(str(exc)) from exc


def _decode_payload(obj: dict[str, Any]) -> Payload:
    tag = obj.get("type")
    if not isinstance(tag, str):
        raise MalformedFrame("payload missing string 'type'")
    cls = _TAGS.get(tag)
    if cls is None:
        raise UnknownPayloadTag(f"unknown payload tag {tag!r}")
    decoder = _DECODERS[tag]
    try:
        return decoder(obj)
    except (MalformedFrame, UnknownPayloadTag, UnsupportedVersion):
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise MalformedFrame(f"invalid {tag} payload: {exc}") from exc


# --- field helpers ------------------------------------------------------------------


def _require_keys(obj: dict[str, Any], keys: set[str]) -> None:
    got = set(obj)
    if got != keys:
        missing, extra = keys - got, got - keys
        parts = []
        if missing:
            parts.append(f"missing {sorted(missing)}")
        if extra:
            parts.append(f"unexpected {sorted(extra)}")
        raise MalformedFrame("; ".join(parts))


def _expect_str(obj: dict[str, Any], key: str) -> str:
    v = obj[key]
    if not isinstance(v, str):
        raise MalformedFrame(f"{key} must be a string")
    return v


def _expect_int(obj: dict[str, Any], key: str) -> int:
    v = obj[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise MalformedFrame(f"{key} must be an integer")
    return v


def _expect_float(obj: dict[str, Any], key: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MalformedFrame(f"{key} must be a number")
    v = float(v)
    if not math.isfinite(v):
        raise MalformedFrame(f"{key} must be finite")
    return v


def _float_list(raw: Any, n: int, what: str) -> tuple[float, ...]:
    if not isinstance(raw, list) or len(raw) != n:
        raise MalformedFrame(f"{what} must be a list of {n} numbers")
    out = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(float(v)):
            raise MalformedFrame(f"{what} must contain finite numbers")
        out.append(float(v))
    return tuple(out)


def _cell_list(raw: Any, what: str) -> tuple[CellId, ...]:
    if not isinstance(raw, list):
        raise MalformedFrame(f"{what} must be a list")
    cells = []
    for entry in raw:
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not all(isinstance(c, int) and not isinstance(c, bool) and c >= 0 for c in entry)
        ):
            raise MalformedFrame(f"{what} entries must be [location, year] index pairs")
        cells.append(CellId(entry[0], entry[1]))
    return tuple(cells)


# --- object <-> model conversion -----------------------------------------------------


def _pose_obj(pose: Pose) -> dict[str, Any]:
    return {"position": list(pose.position), "orientation": list(pose.orientation)}


def _pose_from(obj: dict[str, Any]) -> Pose:
    position = _float_list(obj["position"], 3, "position")
    orientation = _float_list(obj["orientation"], 4, "orientation")
    try:
        return Pose(position=position, orientation=orientation)
    except ValueError as exc:
        raise MalformedFrame(str(exc)) from exc


def _projection_obj(proj: Projection2D | None) -> dict[str, Any] | None:
    if proj is None:
        return None
    return {
        "axis": proj.series_axis,
        "index": proj.fixed_index,
        "labels": list(proj.labels),
        "values": list(proj.values),
        "range": list(proj.value_range),
    }


def _projection_from(obj: Any) -> Projection2D | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise MalformedFrame("projection must be an object or null")
    _require_keys(obj, {"axis", "index", "labels", "values", "range"})
    axis = _expect_str(obj, "axis")
    if axis not in AXES:
        raise MalformedFrame(f"unknown axis {axis!r}")
    labels = obj["labels"]
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise MalformedFrame("labels must be a list of strings")
    values = _float_list(obj["values"], len(labels), "values")
    lo, hi = _float_list(obj["range"], 2, "range")
    return Projection2D(
        series_axis=axis,  # type: ignore[arg-type]
        fixed_index=_expect_int(obj, "index"),
        labels=tuple(labels),
        values=values,
        value_range=(lo, hi),
    )


def _summary_obj(stats: SummaryStats | None) -> dict[str, Any] | None:
    if stats is None:
        return None
    return {
        "count": stats.count,
        "min": stats.min,
        "max": stats.max,
        "mean": stats.mean,
        "sum": stats.sum,
    }


def _summary_from(obj: Any) -> SummaryStats | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise MalformedFrame("stats must be an object or null")
    _require_keys(obj, {"count", "min", "max", "mean", "sum"})
    count = _expect_int(obj, "count")

    def opt(key: str) -> float | None:
        return None if obj[key] is None else _expect_float(obj, key)

    return SummaryStats(
        count=count, min=opt("min"), max=opt("max"), mean=opt("mean"), sum=_expect_float(obj, "sum")
    )


def _cube_obj(cube: DataCube) -> dict[str, Any]:
    return {
        "locations": list(cube.locations),
        "years": list(cube.years),
        "values": [list(row) for row in cube.values],
        "measure": cube.measure_name,
        "unit": cube.measure_unit,
    }


def _cube_from(obj: Any) -> DataCube:
    if not isinstance(obj, dict):
        raise MalformedFrame("cube must be an object")
    _require_keys(obj, {"locations", "years", "values", "measure", "unit"})
    locations = obj["locations"]
    years = obj["years"]
    if not isinstance(locations, list) or not all(isinstance(x, str) for x in locations):
        raise MalformedFrame("locations must be a list of strings")
    if not isinstance(years, list) or not all(isinstance(x, str) for x in years):
        raise MalformedFrame("years must be a list of strings")
    raw_values = obj["values"]
    if not isinstance(raw_values, list) or len(raw_values) != len(locations):
        raise MalformedFrame("values must have one row per location")
    values = tuple(_float_list(row, len(years), "values row") for row in raw_values)
    return DataCube(
        locations=tuple(locations),
        years=tuple(years),
        values=values,
        measure_name=_expect_str(obj, "measure"),
        measure_unit=_expect_str(obj, "unit"),
    )


def _layout_obj(layout: ChartLayout) -> dict[str, Any]:
    return {
        "cube_digest": layout.cube_digest,
        "heights": [list(row) for row in layout.bar_heights],
        "rects": [[list(r) for r in row] for row in layout.cell_rects],
    }


def _layout_from(obj: Any) -> ChartLayout:
    if not isinstance(obj, dict):
        raise MalformedFrame("layout must be an object")
    _require_keys(obj, {"cube_digest", "heights", "rects"})
    heights_raw = obj["heights"]
    rects_raw = obj["rects"]
    if not isinstance(heights_raw, list) or not heights_raw:
        raise MalformedFrame("heights must be a non-empty list")
    n_loc = len(heights_raw)
    n_year = len(heights_raw[0]) if isinstance(heights_raw[0], list) else 0
    heights = tuple(_float_list(row, n_year, "heights row") for row in heights_raw)
    if not isinstance(rects_raw, list) or len(rects_raw) != n_loc:
        raise MalformedFrame("rects must have one row per location")
    rects = tuple(
        tuple(Rect(*_float_list(r, 4, "rect")) for r in _expect_row(row, n_year)) for row in rects_raw
    )
    return ChartLayout(
        cube_digest=_expect_str(obj, "cube_digest"),
        n_locations=n_loc,
        n_years=n_year,
        bar_heights=heights,
        cell_rects=rects,
    )


def _expect_row(row: Any, n: int) -> list[Any]:
    if not isinstance(row, list) or len(row) != n:
        raise MalformedFrame(f"expected a row of {n} entries")
    return row


def _screen_obj(screen: ScreenConfig) -> dict[str, Any]:
    def rect(r: PixelRect) -> list[int]:
        return [r.x, r.y, r.width, r.height]

    return {
        "width": screen.width_px,
        "height": screen.height_px,
        "selection_area": rect(screen.selection_area),
        "exploration_area": rect(screen.exploration_area),
    }


def _screen_from(obj: Any) -> ScreenConfig:
    if not isinstance(obj, dict):
        raise MalformedFrame("screen must be an object")
    _require_keys(obj, {"width", "height", "selection_area", "exploration_area"})

    def rect(key: str) -> PixelRect:
        raw = obj[key]
        if not isinstance(raw, list) or len(raw) != 4 or not all(
            isinstance(c, int) and not isinstance(c, bool) for c in raw
        ):
            raise MalformedFrame(f"{key} must be [x, y, width, height] integers")
        return PixelRect(*raw)

    try:
        return ScreenConfig(
            width_px=_expect_int(obj, "width"),
            height_px=_expect_int(obj, "height"),
            selection_area=rect("selection_area"),
            exploration_area=rect("exploration_area"),
        )
    except ValueError as exc:
        raise MalformedFrame(str(exc)) from exc


def _state_obj(state: SessionState) -> dict[str, Any]:
    return {
        "cube_digest": state.cube_digest,
        "selection": [c.as_list() for c in sorted(state.selection)],
        "pose": _pose_obj(state.pose),
        "pose_writer": (
            None
            if state.pose_writer is None
            else {"seq": state.pose_writer[0], "client": state.pose_writer[1]}
        ),
        "projection": _projection_obj(state.projection),
        "summary": _summary_obj(state.summary),
        "watermarks": {cid: seq for cid, seq in state.watermarks},
    }


def _state_from(obj: Any) -> SessionState:
    if not isinstance(obj, dict):
        raise MalformedFrame("state must be an object")
    _require_keys(
        obj, {"cube_digest", "selection", "pose", "pose_writer", "projection", "summary", "watermarks"}
    )
    writer_raw = obj["pose_writer"]
    writer: tuple[int, str] | None = None
    if writer_raw is not None:
        if not isinstance(writer_raw, dict):
            raise MalformedFrame("pose_writer must be an object or null")
        _require_keys(writer_raw, {"seq", "client"})
        writer = (_expect_int(writer_raw, "seq"), _expect_str(writer_raw, "client"))
    marks_raw = obj["watermarks"]
    if not isinstance(marks_raw, dict) or not all(
        isinstance(k, str) and isinstance(v, int) and not isinstance(v, bool)
        for k, v in marks_raw.items()
    ):
        raise MalformedFrame("watermarks must map client ids to integers")
    pose_raw = obj["pose"]
    if not isinstance(pose_raw, dict):
        raise MalformedFrame("pose must be an object")
    _require_keys(pose_raw, {"position", "orientation"})
    return SessionState(
        cube_digest=_expect_str(obj, "cube_digest"),
        selection=frozenset(_cell_list(obj["selection"], "selection")),
        pose=_pose_from(pose_raw),
        pose_writer=writer,
        projection=_projection_from(obj["projection"]),
        summary=_summary_from(obj["summary"]),
        watermarks=tuple(sorted(marks_raw.items())),
    )


# --- payload decoders ------------------------------------------------------------------


def _decode_hello(obj: dict[str, Any]) -> Hello:
    _require_keys(obj, {"type", "role", "capabilities"})
    caps_raw = obj["capabilities"]
    if not isinstance(caps_raw, list) or not all(isinstance(c, str) for c in caps_raw):
        raise MalformedFrame("capabilities must be a list of strings")
    return Hello(role=_expect_str(obj, "role"), capabilities=frozenset(caps_raw))


def _decode_tap(obj: dict[str, Any]) -> TapScreen:
    _require_keys(obj, {"type", "x", "y"})
    return TapScreen(x=_expect_float(obj, "x"), y=_expect_float(obj, "y"))


def _decode_axis_tap(obj: dict[str, Any]) -> AxisTap:
    _require_keys(obj, {"type", "axis", "index"})
    return AxisTap(axis=_expect_str(obj, "axis"), index=_expect_int(obj, "index"))


def _decode_pose_update(obj: dict[str, Any]) -> PoseUpdate:
    _require_keys(obj, {"type", "position", "orientation"})
    return PoseUpdate(pose=_pose_from(obj))


def _decode_project_request(obj: dict[str, Any]) -> ProjectRequest:
    _require_keys(obj, {"type", "axis", "index"})
    return ProjectRequest(axis=_expect_str(obj, "axis"), index=_expect_int(obj, "index"))


def _decode_empty(cls: type[Payload]) -> Callable[[dict[str, Any]], Payload]:
    def decoder(obj: dict[str, Any]) -> Payload:
        _require_keys(obj, {"type"})
        return cls()

    return decoder


def _decode_haptic(obj: dict[str, Any]) -> HapticPulse:
    _require_keys(obj, {"type", "amplitude", "duration_ms"})
    amplitude = _expect_float(obj, "amplitude")
    duration = _expect_int(obj, "duration_ms")
    if not 0.0 <= amplitude <= 1.0:
        raise MalformedFrame(f"amplitude {amplitude} outside [0,1]")
    if not 0 < duration <= MAX_PULSE_MS:
        raise MalformedFrame(f"duration_ms {duration} outside (0,{MAX_PULSE_MS}]")
    return HapticPulse(command=HapticCommand(amplitude=amplitude, duration_ms=duration))


def _decode_ack(obj: dict[str, Any]) -> Ack:
    _require_keys(obj, {"type", "seq"})
    return Ack(seq=_expect_int(obj, "seq"))


def _decode_error(obj: dict[str, Any]) -> ErrorReply:
    _require_keys(obj, {"type", "code", "detail", "seq"})
    return ErrorReply(
        code=_expect_str(obj, "code"), detail=_expect_str(obj, "detail"), seq=_expect_int(obj, "seq")
    )


def _decode_delta(obj: dict[str, Any]) -> StateDelta:
    _require_keys(obj, {"type", "cause", "changes"})
    cause_raw = obj["cause"]
    if not isinstance(cause_raw, dict):
        raise MalformedFrame("cause must be an object")
    _require_keys(cause_raw, {"client", "seq"})
    cause = (_expect_str(cause_raw, "client"), _expect_int(cause_raw, "seq"))
    changes_raw = obj["changes"]
    if not isinstance(changes_raw, list):
        raise MalformedFrame("changes must be a list")
    changes: list[Change] = []
    for entry in changes_raw:
        if not isinstance(entry, dict):
            raise MalformedFrame("change entries must be objects")
        kind = entry.get("field")
        if kind == SelectionChange.FIELD:
            _require_keys(entry, {"field", "cells"})
            changes.append(SelectionChange(cells=_cell_list(entry["cells"], "cells")))
        elif kind == PoseChange.FIELD:
            _require_keys(entry, {"field", "pose", "writer"})
            writer_raw = entry["writer"]
            if not isinstance(writer_raw, dict):
                raise MalformedFrame("writer must be an object")
            _require_keys(writer_raw, {"seq", "client"})
            pose_raw = entry["pose"]
            if not isinstance(pose_raw, dict):
                raise MalformedFrame("pose must be an object")
            _require_keys(pose_raw, {"position", "orientation"})
            changes.append(
                PoseChange(
                    pose=_pose_from(pose_raw),
                    writer=(_expect_int(writer_raw, "seq"), _expect_str(writer_raw, "client")),
                )
            )
        elif kind == ProjectionChange.FIELD:
            _require_keys(entry, {"field", "projection"})
            changes.append(ProjectionChange(projection=_projection_from(entry["projection"])))
        elif kind == SummaryChange.FIELD:
            _require_keys(entry, {"field", "stats"})
            changes.append(SummaryChange(stats=_summary_from(entry["stats"])))
        else:
            raise MalformedFrame(f"unknown change field {kind!r}")
    return StateDelta(cause=cause, changes=tuple(changes))


def _decode_snapshot(obj: dict[str, Any]) -> FullSnapshot:
    _require_keys(obj, {"type", "state", "cube", "layout", "screen"})
    return FullSnapshot(
        state=_state_from(obj["state"]),
        cube=_cube_from(obj["cube"]),
        layout=_layout_from(obj["layout"]),
        screen=_screen_from(obj["screen"]),
    )


_DECODERS: dict[str, Callable[[dict[str, Any]], Payload]] = {
    Hello.TAG: _decode_hello,
    TapScreen.TAG: _decode_tap,
    AxisTap.TAG: _decode_axis_tap,
    PoseUpdate.TAG: _decode_pose_update,
    ProjectRequest.TAG: _decode_project_request,
    SummarizeRequest.TAG: _decode_empty(SummarizeRequest),
    ClearProjection.TAG: _decode_empty(ClearProjection),
    HapticPulse.TAG: _decode_haptic,
    Ack.TAG: _decode_ack,
    ErrorReply.TAG: _decode_error,
    Ping.TAG: _decode_empty(Ping),
    Pong.TAG: _decode_empty(Pong),
    StateDelta.TAG: _decode_delta,
    FullSnapshot.TAG: _decode_snapshot,
}
