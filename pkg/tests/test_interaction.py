import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoproxy.datacube import CellId, layout_chart
from holoproxy.errors import DegenerateRange, OutOfBoundsCell, OutOfBoundsIndex
from holoproxy.interaction import (
    PixelRect,
    ScreenConfig,
    SelectionState,
    axis_select,
    axis_slice,
    default_screen,
    haptic_encode,
    hit_test_mark,
    project_series,
    toggle_select,
)

from helpers import cells, grid_cube, random_cube, screen_1000x500


def exhaustive_hit(point, layout, screen):
    """Oracle: scan every cell rect for containment."""
    px, py = point
    area = screen.selection_area
    if not (area.x <= px < area.x + area.width and area.y <= py < area.y + area.height):
        return None
    u = (px - area.x) / area.width
    v = (py - area.y) / area.height
    hits = [
        CellId(i, j)
        for i in range(layout.n_locations)
        for j in range(layout.n_years)
        if layout.cell_rects[i][j].contains(u, v)
    ]
    assert len(hits) <= 1
    return hits[0] if hits else None


class TestScreenConfig:
    def test_default_screen_split(self):
        screen = default_screen()
        assert screen.selection_area.x == 0
        assert screen.exploration_area.x == screen.selection_area.width

    def test_rejects_overlapping_areas(self):
        with pytest.raises(ValueError):
            ScreenConfig(100, 100, PixelRect(0, 0, 60, 100), PixelRect(50, 0, 50, 100))

    def test_rejects_area_outside_screen(self):
        with pytest.raises(ValueError):
            ScreenConfig(100, 100, PixelRect(0, 0, 120, 100), PixelRect(0, 0, 10, 10))


class TestHitTest:
    def test_known_point_4x3(self):
        # 4 years x 3 locations on a 1000x500 screen, selection = left half.
        cube = grid_cube(3, 4)
        layout = layout_chart(cube)
        screen = screen_1000x500()
        point = (60, 40)
        assert hit_test_mark(point, layout, screen) == exhaustive_hit(point, layout, screen)
        assert hit_test_mark(point, layout, screen) == CellId(location=0, year=0)

    def test_exploration_area_is_no_hit(self):
        cube = grid_cube(3, 4)
        layout = layout_chart(cube)
        assert hit_test_mark((750, 250), layout, screen_1000x500()) is None

    def test_shared_edge_follows_half_open_rule(self):
        # Edge x = 0.25 between year 0 and year 1 belongs to year 1's rect,
        # whose low edge it is.
        cube = grid_cube(3, 4)
        layout = layout_chart(cube)
        screen = screen_1000x500()
        assert hit_test_mark((125, 0), layout, screen) == CellId(location=0, year=1)
        assert exhaustive_hit((125, 0), layout, screen) == CellId(location=0, year=1)

    def test_agrees_with_exhaustive_scan(self):
        rng = random.Random(2024)
        screen = screen_1000x500()
        for _ in range(8):
            cube = random_cube(rng, max_side=9)
            layout = layout_chart(cube)
            for _ in range(400):
                point = (rng.uniform(0, 1000), rng.uniform(0, 500))
                assert hit_test_mark(point, layout, screen) == exhaustive_hit(
                    point, layout, screen
                )

    def test_grid_edges_agree_with_scan(self):
        cube = grid_cube(3, 6)
        layout = layout_chart(cube)
        screen = screen_1000x500()
        area = screen.selection_area
        for j in range(6):
            for i in range(3):
                px = area.x + (j / 6) * area.width
                py = area.y + (i / 3) * area.height
                point = (px, py)
                assert hit_test_mark(point, layout, screen) == exhaustive_hit(
                    point, layout, screen
                )


class TestSelection:
    def test_toggle_into_empty(self):
        cube = grid_cube(2, 3)
        state = SelectionState()
        assert toggle_select(state, cube, CellId(0, 0)).selected == cells((0, 0))

    def test_toggle_is_involution(self):
        cube = grid_cube(2, 3)
        state = SelectionState(cells((1, 2)))
        once = toggle_select(state, cube, CellId(0, 1))
        twice = toggle_select(once, cube, CellId(0, 1))
        assert twice == state

    def test_toggle_removes_member(self):
        cube = grid_cube(2, 3)
        state = SelectionState(cells((0, 0), (1, 2)))
        assert toggle_select(state, cube, CellId(1, 2)).selected == cells((0, 0))

    def test_toggle_out_of_bounds(self):
        cube = grid_cube(2, 3)
        with pytest.raises(OutOfBoundsCell):
            toggle_select(SelectionState(), cube, CellId(5, 0))

    @given(st.integers(0, 1), st.integers(0, 2), st.integers(0, 1), st.integers(0, 2))
    def test_toggle_involution_property(self, i1, j1, i2, j2):
        cube = grid_cube(2, 3)
        state = SelectionState(cells((i1, j1)))
        cell = CellId(i2, j2)
        assert toggle_select(toggle_select(state, cube, cell), cube, cell) == state


class TestAxisSelect:
    def test_select_location_slice_on_empty(self):
        # 4 years x 3 locations: location slice has 4 cells.
        cube = grid_cube(3, 4)
        got = axis_select(SelectionState(), cube, "location", 1).selected
        expected = frozenset(
            CellId(i, j) for i in range(3) for j in range(4) if i == 1
        )  # brute-force slice enumeration
        assert got == expected
        assert len(got) == 4

    def test_repeat_removes_slice(self):
        cube = grid_cube(3, 4)
        once = axis_select(SelectionState(), cube, "location", 1)
        twice = axis_select(once, cube, "location", 1)
        assert twice.selected == frozenset()

    def test_union_with_partial_overlap(self):
        cube = grid_cube(3, 4)
        state = SelectionState(cells((1, 0)))
        got = axis_select(state, cube, "location", 1).selected
        assert got == cells((1, 0), (1, 1), (1, 2), (1, 3))

    def test_year_axis(self):
        cube = grid_cube(3, 4)
        got = axis_select(SelectionState(), cube, "year", 2).selected
        assert got == cells((0, 2), (1, 2), (2, 2))

    def test_out_of_bounds_index(self):
        cube = grid_cube(3, 4)
        with pytest.raises(OutOfBoundsIndex):
            axis_select(SelectionState(), cube, "location", 3)
        with pytest.raises(OutOfBoundsIndex):
            axis_slice(cube, "year", -1)

    def test_double_application_returns_original(self):
        # Involution holds when the starting selection does not partially
        # overlap the slice (all-in -> remove, else union makes a partial
        # overlap collapse into the slice on the first application).
        rng = random.Random(11)
        checked = 0
        while checked < 40:
            cube = random_cube(rng, max_side=5)
            all_cells = list(cube.cells())
            base = SelectionState(
                frozenset(rng.sample(all_cells, rng.randint(0, len(all_cells))))
            )
            axis = rng.choice(["location", "year"])
            index = rng.randrange(cube.n_locations if axis == "location" else cube.n_years)
            slice_set = axis_slice(cube, axis, index)
            overlap = base.selected & slice_set
            if overlap and overlap != slice_set:
                continue
            once = axis_select(base, cube, axis, index)
            assert axis_select(once, cube, axis, index) == base
            checked += 1

    def test_post_state_is_stable_under_double_application(self):
        # From any state, the post-state of one application is a fixed point
        # of applying the gesture twice more.
        rng = random.Random(12)
        for _ in range(40):
            cube = random_cube(rng, max_side=5)
            all_cells = list(cube.cells())
            base = SelectionState(
                frozenset(rng.sample(all_cells, rng.randint(0, len(all_cells))))
            )
            axis = rng.choice(["location", "year"])
            index = rng.randrange(cube.n_locations if axis == "location" else cube.n_years)
            once = axis_select(base, cube, axis, index)
            thrice = axis_select(axis_select(once, cube, axis, index), cube, axis, index)
            assert thrice == once


class TestHapticEncode:
    def test_endpoints(self):
        assert haptic_encode(100.0, (0.0, 100.0)).amplitude == 1.0
        assert haptic_encode(0.0, (0.0, 100.0)).amplitude == 0.1

    def test_midpoint_affine(self):
        # Independent evaluation of the affine map: 0.1 + 0.9 * 50/100.
        cmd = haptic_encode(50.0, (0.0, 100.0))
        assert cmd.amplitude == pytest.approx(0.1 + 0.9 * (50.0 - 0.0) / 100.0)
        assert cmd.amplitude == pytest.approx(0.55)
        assert cmd.duration_ms == 150

    def test_degenerate_range(self):
        with pytest.raises(DegenerateRange):
            haptic_encode(1.0, (5.0, 5.0))

    def test_difference_mode_requires_other(self):
        with pytest.raises(ValueError):
            haptic_encode(1.0, (0.0, 10.0), mode="difference")

    @given(st.floats(0, 100), st.floats(0, 100))
    def test_difference_symmetric(self, a, b):
        r = (0.0, 100.0)
        assert haptic_encode(a, r, "difference", b) == haptic_encode(b, r, "difference", a)

    @settings(max_examples=200)
    @given(st.floats(-50, 150), st.floats(-50, 150))
    def test_absolute_monotone_and_bounded(self, v1, v2):
        r = (0.0, 100.0)
        lo, hi = sorted([v1, v2])
        a_lo = haptic_encode(lo, r).amplitude
        a_hi = haptic_encode(hi, r).amplitude
        assert a_lo <= a_hi
        assert 0.1 <= a_lo <= 1.0 and 0.1 <= a_hi <= 1.0


class TestProjectSeries:
    def test_fix_location_slice(self):
        # Brute-force slice extraction oracle.
        cube = grid_cube(3, 4)
        proj = project_series(cube, "location", 2)
        expected = tuple(cube.values[2][j] for j in range(4))
        assert proj.values == expected
        assert proj.labels == cube.years
        assert len(proj.values) == 4

    def test_fix_year_slice(self):
        cube = grid_cube(3, 4)
        proj = project_series(cube, "year", 1)
        assert proj.values == tuple(cube.values[i][1] for i in range(3))
        assert proj.labels == cube.locations

    def test_singleton_cube(self):
        cube = grid_cube(1, 1, values=[[3.5]])
        for axis in ("location", "year"):
            proj = project_series(cube, axis, 0)
            assert proj.values == (3.5,)

    def test_full_cube_value_range(self):
        cube = grid_cube(2, 2, values=[[1.0, 9.0], [3.0, 4.0]])
        proj = project_series(cube, "location", 1)
        assert proj.value_range == (1.0, 9.0)

    def test_out_of_bounds(self):
        cube = grid_cube(2, 2)
        with pytest.raises(OutOfBoundsIndex):
            project_series(cube, "year", 2)

    def test_roundtrip_reinsertion(self):
        rng = random.Random(3)
        for _ in range(20):
            cube = random_cube(rng, max_side=6)
            axis = rng.choice(["location", "year"])
            index = rng.randrange(cube.n_locations if axis == "location" else cube.n_years)
            proj = project_series(cube, axis, index)
            if axis == "location":
                src = [cube.values[index][j] for j in range(cube.n_years)]
            else:
                src = [cube.values[i][index] for i in range(cube.n_locations)]
            assert list(proj.values) == src  # exact sub-sequence, no reordering
