"""Proxy interaction techniques as pure state transitions.

Each operation maps (current state, input event) to a new state or an output
command, with no side effects: tapping mark bases, selecting whole axis
slices, encoding values as vibration amplitude, and projecting a chart slice
onto the 2D display. Event ordering across clients is the reducer's problem,
not handled here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .datacube import CellId, ChartLayout, DataCube, Rect
from .errors import DegenerateRange, OutOfBoundsIndex

Axis = Literal["location", "year"]
HapticMode = Literal["absolute", "difference"]

HAPTIC_FLOOR = 0.1  # zero amplitude is indistinguishable from no feedback
HAPTIC_PULSE_MS = 150
MAX_PULSE_MS = 2000


@dataclass(frozen=True)
class PixelRect:
    """Screen-space rectangle in pixels, half-open like the layout grid."""

    x: int
    y: int
    width: int
    height: int

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px < self.x + self.width and self.y <= py < self.y + self.height


@dataclass(frozen=True)
class ScreenConfig:
    """Proxy screen partition: tap targets live in the selection area (under
    the hologram), projections and summaries in the exploration area."""

    width_px: int
    height_px: int
    selection_area: PixelRect
    exploration_area: PixelRect

    def __post_init__(self) -> None:
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError("screen dimensions must be positive")
        screen = PixelRect(0, 0, self.width_px, self.height_px)
        for area in (self.selection_area, self.exploration_area):
            if area.width <= 0 or area.height <= 0:
                raise ValueError("screen areas must have positive size")
            if not (
                screen.contains(area.x, area.y)
                and area.x + area.width <= self.width_px
                and area.y + area.height <= self.height_px
            ):
                raise ValueError("screen area extends outside the screen")
        a, b = self.selection_area, self.exploration_area
        overlap_x = a.x < b.x + b.width and b.x < a.x + a.width
        overlap_y = a.y < b.y + b.height and b.y < a.y + a.height
        if overlap_x and overlap_y:
            raise ValueError("selection and exploration areas overlap")


def default_screen(width_px: int = 2400, height_px: int = 1080) -> ScreenConfig:
    """Landscape split: selection area on the left half (hologram mounted
    there), exploration area on the right half."""
    half = width_px // 2
    return ScreenConfig(
        width_px=width_px,
        height_px=height_px,
        selection_area=PixelRect(0, 0, half, height_px),
        exploration_area=PixelRect(half, 0, width_px - half, height_px),
    )


@dataclass(frozen=True)
class SelectionState:
    """Set of selected marks."""

    selected: frozenset[CellId] = frozenset()

    def sorted_cells(self) -> list[CellId]:
        return sorted(self.selected)


@dataclass(frozen=True)
class HapticCommand:
    """One vibration pulse: amplitude encodes a value, duration is fixed."""

    amplitude: float
    duration_ms: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValueError(f"amplitude {self.amplitude} outside [0,1]")
        if not 0 < self.duration_ms <= MAX_PULSE_MS:
            raise ValueError(f"duration {self.duration_ms} outside (0,{MAX_PULSE_MS}]")


@dataclass(frozen=True)
class Projection2D:
    """A single chart slice rendered on the 2D display, at full-cube scale."""

    series_axis: Axis  # the axis that was fixed
    fixed_index: int
    labels: tuple[str, ...]  # free-axis category labels, in axis order
    values: tuple[float, ...]
    value_range: tuple[float, float]  # (min, max) of the whole cube

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.values):
            raise ValueError("labels and values must have equal length")


def hit_test_mark(
    point_px: tuple[float, float], layout: ChartLayout, screen: ScreenConfig
) -> CellId | None:
    """Map a tap to the mark base cell under it, or None outside the
    selection area. Ties on shared cell edges follow the half-open rule: the
    edge belongs to the cell whose low edge it is."""
    px, py = point_px
    area = screen.selection_area
    if not area.contains(px, py):
        return None
    u = (px - area.x) / area.width
    v = (py - area.y) / area.height
    return _cell_at(layout, u, v)


def _cell_at(layout: ChartLayout, u: float, v: float) -> CellId | None:
    # Floor gives the candidate; rect containment is the ground truth, so
    # check neighbors to absorb boundary rounding.
    j0 = min(int(u * layout.n_years), layout.n_years - 1)
    i0 = min(int(v * layout.n_locations), layout.n_locations - 1)
    for i in (i0, i0 - 1, i0 + 1):
        if not 0 <= i < layout.n_locations:
            continue
        for j in (j0, j0 - 1, j0 + 1):
            if not 0 <= j < layout.n_years:
                continue
            rect: Rect = layout.cell_rects[i][j]
            if rect.contains(u, v):
                return CellId(i, j)
    return None


def toggle_select(state: SelectionState, cube: DataCube, cell: CellId) -> SelectionState:
    """Flip one cell's membership; everything else unchanged."""
    cube.require_cell(cell)
    if cell in state.selected:
        return SelectionState(state.selected - {cell})
    return SelectionState(state.selected | {cell})


def axis_slice(cube: DataCube, axis: Axis, index: int) -> frozenset[CellId]:
    """All cells of one slice along the given axis."""
    if axis == "location":
        if not 0 <= index < cube.n_locations:
            raise OutOfBoundsIndex(f"location {index} outside 0..{cube.n_locations - 1}")
        return frozenset(CellId(index, j) for j in range(cube.n_years))
    if axis == "year":
        if not 0 <= index < cube.n_years:
            raise OutOfBoundsIndex(f"year {index} outside 0..{cube.n_years - 1}")
        return frozenset(CellId(i, index) for i in range(cube.n_locations))
    raise OutOfBoundsIndex(f"unknown axis {axis!r}")


def axis_select(
    state: SelectionState, cube: DataCube, axis: Axis, index: int
) -> SelectionState:
    """Select a whole slice; if the slice is already fully selected, remove
    it instead, so one gesture both selects and deselects."""
    cells = axis_slice(cube, axis, index)
    if cells <= state.selected:
        return SelectionState(state.selected - cells)
    return SelectionState(state.selected | cells)


def haptic_encode(
    value: float,
    value_range: tuple[float, float],
    mode: HapticMode = "absolute",
    other: float | None = None,
) -> HapticCommand:
    """Map a value (or the difference between two values) onto vibration
    amplitude in [0.1, 1.0]; range min maps to the 0.1 floor, max to 1.0."""
    lo, hi = value_range
    if not hi > lo:
        raise DegenerateRange(f"range ({lo}, {hi}) has no extent")
    if mode == "absolute":
        t = (value - lo) / (hi - lo)
    elif mode == "difference":
        if other is None:
            raise ValueError("difference mode requires `other`")
        t = abs(value - other) / (hi - lo)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    amplitude = HAPTIC_FLOOR + (1.0 - HAPTIC_FLOOR) * t
    amplitude = min(1.0, max(HAPTIC_FLOOR, amplitude))
    return HapticCommand(amplitude=amplitude, duration_ms=HAPTIC_PULSE_MS)


def project_series(cube: DataCube, axis: Axis, index: int) -> Projection2D:
    """Extract one slice in free-axis order, carrying the full cube's value
    range so the 2D chart shares the hologram's scale."""
    if axis == "location":
        if not 0 <= index < cube.n_locations:
            raise OutOfBoundsIndex(f"location {index} outside 0..{cube.n_locations - 1}")
        labels = cube.years
        values = tuple(cube.values[index])
    elif axis == "year":
        if not 0 <= index < cube.n_years:
            raise OutOfBoundsIndex(f"year {index} outside 0..{cube.n_years - 1}")
        labels = cube.locations
        values = tuple(cube.values[i][index] for i in range(cube.n_locations))
    else:
        raise OutOfBoundsIndex(f"unknown axis {axis!r}")
    return Projection2D(
        series_axis=axis,
        fixed_index=index,
        labels=labels,
        values=values,
        value_range=cube.value_range(),
    )


def slice_cells(cube: DataCube, axis: Axis, index: int) -> list[CellId]:
    """CellIds of a slice in free-axis order (matches project_series order)."""
    if axis == "location":
        return [CellId(index, j) for j in range(cube.n_years)]
    return [CellId(i, index) for i in range(cube.n_locations)]
