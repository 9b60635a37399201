"""Study tasks as machine-checkable oracles plus their client-side answer
derivations.

Oracles compute expected answers by brute force over the cube, never from the
interaction path. Derivations answer the same questions from what a client
can actually observe after synchronization: the projected slice for range and
order tasks, haptic pulse amplitudes for the compare task.
"""

from __future__ import annotations

from .datacube import CellId, DataCube
from .interaction import Axis, Projection2D, slice_cells


def oracle_range(cube: DataCube, axis: Axis, index: int) -> tuple[CellId, CellId]:
    """Argmin/argmax over one slice; ties go to the lowest free-axis index."""
    cells = slice_cells(cube, axis, index)
    lo = hi = cells[0]
    for cell in cells[1:]:
        if cube.value(cell) < cube.value(lo):
            lo = cell
        if cube.value(cell) > cube.value(hi):
            hi = cell
    return lo, hi


def oracle_order(cube: DataCube, axis: Axis, index: int) -> list[CellId]:
    """Stable ascending sort of one slice."""
    cells = slice_cells(cube, axis, index)
    return sorted(cells, key=lambda c: cube.value(c))


def oracle_compare(cube: DataCube, cells: tuple[CellId, CellId, CellId]) -> CellId:
    """Cell with the minimum value; ties go lexicographically lowest."""
    if len(set(cells)) != 3:
        raise ValueError("compare task needs three distinct cells")
    return min(cells, key=lambda c: (cube.value(c), (c.location, c.year)))


# --- client-visible derivations ----------------------------------------------------


def _projection_cells(projection: Projection2D) -> list[CellId]:
    if projection.series_axis == "location":
        return [CellId(projection.fixed_index, j) for j in range(len(projection.values))]
    return [CellId(i, projection.fixed_index) for i in range(len(projection.values))]


def derive_range(projection: Projection2D) -> tuple[CellId, CellId]:
    """Read min/max off the projected slice as shown on the proxy display."""
    cells = _projection_cells(projection)
    lo_k = min(range(len(cells)), key=lambda k: (projection.values[k], k))
    hi_k = max(range(len(cells)), key=lambda k: (projection.values[k], -k))
    return cells[lo_k], cells[hi_k]


def derive_order(projection: Projection2D) -> list[CellId]:
    cells = _projection_cells(projection)
    order = sorted(range(len(cells)), key=lambda k: projection.values[k])
    return [cells[k] for k in order]


def derive_compare(amplitudes: dict[CellId, float]) -> CellId:
    """Pick the weakest vibration; the amplitude map is affine in value, so
    argmin amplitude = argmin value. Amplitude ties fall back to the same
    lexicographic rule the oracle uses."""
    return min(amplitudes, key=lambda c: (amplitudes[c], (c.location, c.year)))
