import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from braillekit.dots import DotSet, Side
from braillekit.errors import GridInconsistencyError
from braillekit.grid import (
    BRAILLE_BLOCK_BASE,
    BrailleCell,
    assign_dots,
    build_grid,
    cluster_lines,
    decode_cell,
    decode_cells,
    mirror_pattern,
    pattern_grid,
    verso_from_recto,
)
from braillekit.segmentation import detect_segmentation
from braillekit.synth import SynthSpec, dot_sites, random_patterns

from conftest import make_page


def dotset_from_xy(xy, width=800, height=600, confidence=None):
    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    conf = np.ones(len(xy)) if confidence is None else np.asarray(confidence)
    return DotSet(xy, Side.RECTO, conf, "test", width, height)


class TestClusterLines:
    def test_two_obvious_clusters(self):
        lines = cluster_lines(np.array([100.1, 99.8, 120.2, 119.9]), merge_gap=8.0)
        assert np.allclose(lines, [99.95, 120.05])

    def test_single_value(self):
        assert np.allclose(cluster_lines(np.array([42.5]), 5.0), [42.5])

    def test_lattice_with_jitter_recovered(self, rng):
        truth = np.arange(50.0, 650.0, 48.0)
        coords = np.concatenate([truth + rng.uniform(-1, 1, len(truth)) for _ in range(6)])
        lines = cluster_lines(coords, merge_gap=8.0)
        assert len(lines) == len(truth)
        assert np.max(np.abs(lines - truth)) <= 0.5

    @given(st.lists(st.floats(0, 1000), min_size=1, max_size=60))
    @settings(max_examples=50, deadline=None)
    def test_line_positions_are_means_within_gap(self, values):
        lines = cluster_lines(np.array(values), merge_gap=4.0)
        assert np.all(np.diff(lines) > 0)
        # every input coordinate is within the data spread of some line
        v = np.sort(np.asarray(values))
        assert lines.min() >= v.min() - 1e-9 and lines.max() <= v.max() + 1e-9


class TestBuildGrid:
    def test_full_grid_recovered(self, geometry, rng):
        spec = SynthSpec(rows=5, cols=8, recto_patterns=np.full((5, 8), 63))
        xy = dot_sites(spec, spec.recto_patterns)
        xy = xy + rng.uniform(-0.5, 0.5, size=xy.shape)
        grid = build_grid(dotset_from_xy(xy), geometry)
        assert grid.n_rows == 5 and grid.n_cols == 8
        truth_x = np.sort(np.unique(dot_sites(spec, spec.recto_patterns)[:, 0]))
        assert len(grid.x_lines) == len(truth_x)
        assert np.max(np.abs(grid.x_lines - truth_x)) <= 0.5

    def test_missing_left_column_synthesized(self, geometry):
        # First cell column only ever uses its right dot column (dots 4-6).
        patterns = np.full((4, 5), 0b111111)
        patterns[:, 0] = 0b111000  # dots 4,5,6 only
        spec = SynthSpec(rows=4, cols=5, recto_patterns=patterns)
        xy = dot_sites(spec, patterns)
        grid = build_grid(dotset_from_xy(xy), geometry)
        assert grid.n_cols == 5
        full = dot_sites(spec, np.full((4, 5), 63))
        truth_left = np.sort(np.unique(full[:, 0]))[0]
        assert grid.x_lines[0] == pytest.approx(truth_left, abs=0.5)

    def test_random_dots_rejected(self, geometry, rng):
        xy = rng.uniform(30, 570, size=(150, 2))
        with pytest.raises(GridInconsistencyError):
            build_grid(dotset_from_xy(xy), geometry)

    def test_too_few_dots_rejected(self, geometry):
        with pytest.raises(GridInconsistencyError):
            build_grid(dotset_from_xy([[10, 10], [30, 30]]), geometry)

    def test_order_invariance(self, geometry, rng):
        spec = SynthSpec(rows=3, cols=6, recto_patterns=np.full((3, 6), 0b010101))
        xy = dot_sites(spec, spec.recto_patterns)
        a = build_grid(dotset_from_xy(xy), geometry)
        b = build_grid(dotset_from_xy(xy[rng.permutation(len(xy))]), geometry)
        assert np.allclose(a.x_lines, b.x_lines)
        assert np.allclose(a.y_lines, b.y_lines)


class TestAssignDots:
    def _grid(self, geometry, rows=3, cols=4):
        spec = SynthSpec(rows=rows, cols=cols, recto_patterns=np.full((rows, cols), 63))
        xy = dot_sites(spec, spec.recto_patterns)
        return spec, build_grid(dotset_from_xy(xy), geometry)

    def test_dot_at_intersection_sets_bit_one(self, geometry):
        spec, grid = self._grid(geometry)
        site = (grid.x_lines[0], grid.y_lines[0])  # cell (0,0) dot 1
        result = assign_dots(dotset_from_xy([site]), grid)
        assert result.cell_at(0, 0).pattern == 0b000001
        assert all(c.pattern == 0 for c in result.cells if (c.row, c.col) != (0, 0))

    def test_far_dot_is_outlier(self, geometry):
        spec, grid = self._grid(geometry)
        off = (grid.x_lines[0] + 0.5 * geometry.dot_pitch, grid.y_lines[0])
        result = assign_dots(dotset_from_xy([off]), grid)
        assert list(result.outliers) == [0]
        assert all(c.pattern == 0 for c in result.cells)

    def test_collision_keeps_higher_confidence(self, geometry):
        spec, grid = self._grid(geometry)
        site = (float(grid.x_lines[0]), float(grid.y_lines[0]))
        near = (site[0] + 1.0, site[1])
        result = assign_dots(
            dotset_from_xy([site, near], confidence=[0.5, 0.9]), grid
        )
        assert len(result.collisions) == 1
        kept, dropped = result.collisions[0]
        assert kept == 1 and dropped == 0
        assert result.cell_at(0, 0).pattern == 0b000001

    def test_round_trip_patterns(self, geometry, rng):
        patterns = random_patterns(4, 6, rng, nonempty_margins=True)
        spec = SynthSpec(rows=4, cols=6, recto_patterns=patterns)
        xy = dot_sites(spec, patterns)
        grid = build_grid(dotset_from_xy(xy), geometry)
        result = assign_dots(dotset_from_xy(xy), grid)
        assert np.array_equal(pattern_grid(result.cells), patterns)
        assert len(result.outliers) == 0

    def test_popcount_identity(self, geometry, rng):
        patterns = random_patterns(4, 6, rng)
        spec = SynthSpec(rows=4, cols=6, recto_patterns=patterns)
        xy = dot_sites(spec, patterns)
        if len(xy) < 6:
            pytest.skip("degenerate random draw")
        grid = build_grid(dotset_from_xy(xy), geometry)
        result = assign_dots(dotset_from_xy(xy), grid)
        popcount = sum(bin(c.pattern).count("1") for c in result.cells)
        assert popcount + len(result.outliers) == len(xy)


class TestDecode:
    def test_empty_cell_blank_char(self):
        cell = BrailleCell(0, 0, 0, (0, 0, 1, 1))
        assert decode_cell(cell) == chr(BRAILLE_BLOCK_BASE)

    def test_dot_one(self):
        assert decode_cell(BrailleCell(0, 0, 1, (0, 0, 1, 1))) == "⠁"

    def test_dots_1245(self):
        # dots {1,2,4,5} -> bits 0,1,3,4 -> 27 -> U+281B
        pattern = 0b011011
        assert pattern == 27
        assert decode_cell(BrailleCell(0, 0, pattern, (0, 0, 1, 1))) == "⠛"

    def test_bijection_over_all_patterns(self):
        chars = {decode_cell(BrailleCell(0, 0, p, (0, 0, 1, 1))) for p in range(64)}
        assert len(chars) == 64
        assert min(ord(c) for c in chars) == BRAILLE_BLOCK_BASE
        assert max(ord(c) for c in chars) == BRAILLE_BLOCK_BASE + 63

    def test_decode_cells_row_major(self):
        cells = [
            BrailleCell(r, c, r * 2 + c, (0, 0, 1, 1)) for r in range(2) for c in range(2)
        ]
        text = decode_cells(cells)
        assert len(text.rows) == 2
        assert [len(r) for r in text.rows] == [2, 2]
        assert text.rows[0][0] == chr(BRAILLE_BLOCK_BASE)
        assert text.rows[1][1] == chr(BRAILLE_BLOCK_BASE + 3)


class TestVersoFromRecto:
    def test_mirror_endpoints(self):
        dots = dotset_from_xy([[0.0, 10.0]], width=200, height=100)
        out = verso_from_recto(dots, 200)
        assert out.xy[0, 0] == 199.0
        assert out.side is Side.VERSO

    def test_involution(self, rng):
        xy = rng.uniform(0, 199, size=(30, 2))
        dots = dotset_from_xy(xy, width=200, height=300)
        back = verso_from_recto(verso_from_recto(dots, 200), 200)
        assert np.allclose(back.xy, xy)
        assert back.side is Side.RECTO

    def test_mirror_pattern_swaps_columns(self):
        assert mirror_pattern(0b000111) == 0b111000
        assert mirror_pattern(0b111000) == 0b000111
        for p in range(64):
            assert mirror_pattern(mirror_pattern(p)) == p


class TestEndToEndRoundTrip:
    @pytest.mark.parametrize("seed", [31, 32, 33])
    def test_text_to_text(self, geometry, seed):
        img, annotation, spec = make_page(rows=5, cols=9, noise=0.0, seed=seed)
        dots = detect_segmentation(img)
        grid = build_grid(dots, geometry)
        result = assign_dots(dots, grid)
        assert np.array_equal(pattern_grid(result.cells), spec.recto_patterns)
        decoded = decode_cells(result.cells)
        expected = [
            "".join(chr(BRAILLE_BLOCK_BASE + int(p)) for p in row)
            for row in spec.recto_patterns
        ]
        assert decoded.rows == expected
