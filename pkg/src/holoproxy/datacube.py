"""Dataset model, chart layout, and aggregate statistics.

The dataset is a dense 2D cube: categorical locations x categorical years with
one finite quantitative value per cell. Everything downstream (hit testing,
projections, summaries, the session reducer) operates on this substrate.

All types here are immutable after construction and safe to share across
threads; the operations are pure functions.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

from .errors import (
    DatasetError,
    DuplicateCell,
    EmptyDataset,
    MissingCell,
    NonFiniteValue,
    NonNumericValue,
    OutOfBoundsCell,
)

CSV_HEADER = ("location", "year", "value")

# Axis orientation of the rendered 2.5D chart: years run along the horizontal
# axis, locations along the depth axis, the measure along the vertical axis.
AXIS_ASSIGNMENT = {"year": "horizontal", "location": "depth", "measure": "vertical"}


@dataclass(frozen=True, order=True)
class CellId:
    """0-based (location, year) index of one mark in the cube."""

    location: int
    year: int

    def as_list(self) -> list[int]:
        return [self.location, self.year]


class Rect(NamedTuple):
    """Axis-aligned rectangle, half-open on its upper edges: [x0,x1) x [y0,y1)."""

    x0: float
    y0: float
    x1: float
    y1: float

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1


@dataclass(frozen=True)
class DataCube:
    """Immutable location x year grid of finite values."""

    locations: tuple[str, ...]
    years: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]  # values[location][year]
    measure_name: str = "value"
    measure_unit: str = ""

    def __post_init__(self) -> None:
        if not self.locations or not self.years:
            raise EmptyDataset("cube must have at least one location and one year")
        if len(set(self.locations)) != len(self.locations):
            raise DuplicateCell("location labels must be unique")
        if len(set(self.years)) != len(self.years):
            raise DuplicateCell("year labels must be unique")
        for label in self.locations + self.years:
            if "\n" in label or "\r" in label:
                raise DatasetError(f"label contains a line break: {label!r}")
        if len(self.values) != len(self.locations):
            raise MissingCell("value matrix row count != location count")
        for row in self.values:
            if len(row) != len(self.years):
                raise MissingCell("value matrix column count != year count")
            for v in row:
                if not isinstance(v, float) or not math.isfinite(v):
                    raise NonFiniteValue(f"cell value {v!r} is not a finite float")

    @property
    def n_locations(self) -> int:
        return len(self.locations)

    @property
    def n_years(self) -> int:
        return len(self.years)

    def in_bounds(self, cell: CellId) -> bool:
        return 0 <= cell.location < self.n_locations and 0 <= cell.year < self.n_years

    def require_cell(self, cell: CellId) -> None:
        if not self.in_bounds(cell):
            raise OutOfBoundsCell(f"{cell} outside {self.n_locations}x{self.n_years} cube")

    def value(self, cell: CellId) -> float:
        self.require_cell(cell)
        return self.values[cell.location][cell.year]

    def cells(self) -> Iterator[CellId]:
        for i in range(self.n_locations):
            for j in range(self.n_years):
                yield CellId(i, j)

    def value_range(self) -> tuple[float, float]:
        flat = [v for row in self.values for v in row]
        return min(flat), max(flat)

    def canonical_text(self) -> str:
        """Canonical serialization: axes then row-major values.

        Numbers are rendered with shortest-round-trip precision (repr), so the
        text uniquely identifies the cube and survives re-parsing bit-exactly.
        """
        out = ["datacube v1"]
        out.append(f"measure:{self.measure_name}")
        out.append(f"unit:{self.measure_unit}")
        out.append(f"locations:{self.n_locations}")
        out.extend(self.locations)
        out.append(f"years:{self.n_years}")
        out.extend(self.years)
        out.append("values:")
        for row in self.values:
            out.extend(repr(v) for v in row)
        return "\n".join(out) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()


def _year_sort_key(label: str) -> tuple[int, int, str] | tuple[int, str, str]:
    # Numeric labels sort numerically before any non-numeric ones; the rest
    # sort lexicographically. Keeps "9" < "10" for year columns.
    stripped = label.strip()
    if stripped and (stripped.isdigit() or (stripped[0] in "+-" and stripped[1:].isdigit())):
        return (0, int(stripped), label)
    return (1, label, label)


def load_dataset(
    source: str | Iterable[str] | io.TextIOBase,
    measure_name: str = "value",
    measure_unit: str = "",
) -> DataCube:
    """Parse `location,year,value` CSV text into a DataCube.

    Locations keep first-appearance order; years are sorted ascending
    (numeric-aware). Every (location, year) pair must appear exactly once.
    Lines starting with `# measure:` before the header carry the measure
    name/unit, which is how `dump_dataset` round-trips them.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    lines = iter(source)

    header: list[str] | None = None
    for raw in lines:
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("measure:"):
                spec = body[len("measure:") :].strip()
                if "|" in spec:
                    measure_name, measure_unit = (part.strip() for part in spec.split("|", 1))
                else:
                    measure_name = spec
            continue
        header = next(csv.reader([line]))
        break
    if header is None:
        raise EmptyDataset("no header row")
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise DatasetError(f"expected header {','.join(CSV_HEADER)!r}, got {header!r}")

    entries: dict[tuple[str, str], float] = {}
    locations: list[str] = []
    years_seen: set[str] = set()
    for row in csv.reader(lines):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise DatasetError(f"expected 3 fields per row, got {row!r}")
        loc, year, raw_value = row[0], row[1], row[2]
        try:
            value = float(raw_value)
        except ValueError as exc:
            raise NonNumericValue(f"cell ({loc!r},{year!r}): {raw_value!r}") from exc
        if not math.isfinite(value):
            raise NonFiniteValue(f"cell ({loc!r},{year!r}): {raw_value!r}")
        key = (loc, year)
        if key in entries:
            raise DuplicateCell(f"duplicate cell ({loc!r},{year!r})")
        entries[key] = value
        if loc not in locations:
            locations.append(loc)
        years_seen.add(year)

    if not entries:
        raise EmptyDataset("no data rows")

    years = sorted(years_seen, key=_year_sort_key)
    matrix: list[tuple[float, ...]] = []
    for loc in locations:
        row_vals: list[float] = []
        for year in years:
            if (loc, year) not in entries:
                raise MissingCell(f"missing cell ({loc!r},{year!r})")
            row_vals.append(entries[(loc, year)])
        matrix.append(tuple(row_vals))

    return DataCube(
        locations=tuple(locations),
        years=tuple(years),
        values=tuple(matrix),
        measure_name=measure_name,
        measure_unit=measure_unit,
    )


def dump_dataset(cube: DataCube) -> str:
    """Export a cube back to the CSV form accepted by load_dataset."""
    buf = io.StringIO()
    if cube.measure_name != "value" or cube.measure_unit:
        buf.write(f"# measure: {cube.measure_name}|{cube.measure_unit}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for i, loc in enumerate(cube.locations):
        for j, year in enumerate(cube.years):
            writer.writerow([loc, year, repr(cube.values[i][j])])
    return buf.getvalue()


@dataclass(frozen=True)
class ChartLayout:
    """Spatial placement of marks: normalized bar heights plus the grid of
    half-open tap-target rectangles tiling the unit square.

    Columns follow years (horizontal axis), rows follow locations (depth axis).
    """

    cube_digest: str
    n_locations: int
    n_years: int
    bar_heights: tuple[tuple[float, ...], ...]  # heights[location][year] in [0,1]
    cell_rects: tuple[tuple[Rect, ...], ...]  # rects[location][year]
    axis_assignment: tuple[tuple[str, str], ...] = tuple(sorted(AXIS_ASSIGNMENT.items()))

    def rect(self, cell: CellId) -> Rect:
        return self.cell_rects[cell.location][cell.year]

    def height(self, cell: CellId) -> float:
        return self.bar_heights[cell.location][cell.year]


def layout_chart(cube: DataCube) -> ChartLayout:
    """Compute bar heights (value / cube max; all-zero cube keeps heights 0)
    and the year-column x location-row rectangle grid."""
    max_value = max(v for row in cube.values for v in row)
    if max_value > 0:
        heights = tuple(tuple(v / max_value for v in row) for row in cube.values)
    else:
        heights = tuple(tuple(0.0 for _ in row) for row in cube.values)

    n_loc, n_year = cube.n_locations, cube.n_years
    rects = tuple(
        tuple(
            Rect(j / n_year, i / n_loc, (j + 1) / n_year, (i + 1) / n_loc)
            for j in range(n_year)
        )
        for i in range(n_loc)
    )
    return ChartLayout(
        cube_digest=cube.digest(),
        n_locations=n_loc,
        n_years=n_year,
        bar_heights=heights,
        cell_rects=rects,
    )


@dataclass(frozen=True)
class SummaryStats:
    """Aggregate over a selection. count == 0 marks the empty selection:
    min/max/mean are None so UI panels can render a blank state."""

    count: int
    min: float | None
    max: float | None
    mean: float | None
    sum: float

    @property
    def is_empty(self) -> bool:
        return self.count == 0


EMPTY_SUMMARY = SummaryStats(count=0, min=None, max=None, mean=None, sum=0.0)


def summarize(cube: DataCube, selection: Iterable[CellId]) -> SummaryStats:
    """Stats over exactly the selected cells; permutation-invariant."""
    cells = set(selection)
    for cell in cells:
        cube.require_cell(cell)
    if not cells:
        return EMPTY_SUMMARY
    vals = [cube.value(c) for c in sorted(cells)]
    total = math.fsum(vals)
    return SummaryStats(
        count=len(vals),
        min=min(vals),
        max=max(vals),
        mean=total / len(vals),
        sum=total,
    )
