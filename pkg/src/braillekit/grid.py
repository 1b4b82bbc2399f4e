"""Braille cell lattice construction, dot-to-cell assignment, and decoding.

Dot x coordinates cluster into vertical lines that come in pairs (two dot
columns per cell); y coordinates cluster into lines that come in triples
(three dot rows per cell). Because the pitch inside a cell and the pitch
between cells are fixed by the scan resolution, the observed lines fit a
periodic lattice whose phase can be recovered even when many lines have no
dots at all; missing partner lines are synthesized at dot-pitch offsets
from their observed neighbours.

Cell dots are numbered 1-3 down the left column and 4-6 down the right, and
a cell's 6-bit pattern maps directly onto the Unicode Braille block:
pattern bit i-1 set means dot i is present, character = U+2800 + pattern.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .dots import DotSet
from .errors import GridInconsistencyError
from .geometry import DEFAULT_GEOMETRY, GridGeometry

BRAILLE_BLOCK_BASE = 0x2800

MIN_GRID_DOTS = 6
LINE_MERGE_FACTOR = 0.4      # cluster gap, * dot pitch
LATTICE_TOLERANCE_FACTOR = 0.25  # slot snap tolerance, * dot pitch
MIN_INLIER_FRACTION = 0.8
SNAP_RADIUS_FACTOR = 0.35    # dot-to-intersection radius, * dot pitch


def cluster_lines(coords: np.ndarray, merge_gap: float) -> np.ndarray:
    """1-D agglomerative clustering of coordinates into line positions.

    Values are sorted and a new cluster starts whenever the gap to the
    previous value exceeds ``merge_gap``; each line is its cluster mean.
    """
    coords = np.sort(np.asarray(coords, dtype=np.float64).ravel())
    if not len(coords):
        raise ValueError("cannot cluster an empty coordinate list")
    breaks = np.nonzero(np.diff(coords) > merge_gap)[0] + 1
    return np.array([c.mean() for c in np.split(coords, breaks)])


@dataclass
class GridModel:
    """The recovered cell lattice: line positions plus their cell grouping."""

    x_lines: np.ndarray                   # sorted dot-column x positions
    y_lines: np.ndarray                   # sorted dot-row y positions
    columns: list[tuple[int, int]]        # x_lines index pair per cell column
    rows: list[tuple[int, int, int]]      # y_lines index triple per cell row
    geometry: GridGeometry

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def cell_bbox(self, row: int, col: int) -> tuple[float, float, float, float]:
        c = self.columns[col]
        r = self.rows[row]
        return (
            float(self.x_lines[c[0]]),
            float(self.y_lines[r[0]]),
            float(self.x_lines[c[1]]),
            float(self.y_lines[r[2]]),
        )

    def intersections(self) -> tuple[np.ndarray, list[tuple[int, int, int]]]:
        """All dot sites as an (n, 2) array plus their (row, col, bit) addresses."""
        points = []
        address = []
        for ci, col in enumerate(self.columns):
            for ri, row in enumerate(self.rows):
                for jx, xi in enumerate(col):
                    for jy, yi in enumerate(row):
                        points.append((self.x_lines[xi], self.y_lines[yi]))
                        address.append((ri, ci, jy + 3 * jx))
        return np.array(points), address


def _fit_lattice(
    lines: np.ndarray, offsets: np.ndarray, period: float, tol: float
) -> list[list[float | None]]:
    """Fit observed line positions to a periodic lattice of slot groups.

    Each lattice cell ``k`` holds slots at phase + k*period + offsets. The
    phase is found by a dense scan maximizing the number of lines within
    ``tol`` of a slot; lines must be at least MIN_INLIER_FRACTION inliers or
    the fit is rejected. Returns one slot-position list per cell covering
    the observed cell range, with None where no line was observed.
    """

    def wrapped_residual(values: np.ndarray) -> np.ndarray:
        return (values + period / 2.0) % period - period / 2.0

    phis = np.arange(0.0, period, 0.25)
    # residues of each line against each phase candidate: (lines, offsets, phis)
    scan = np.abs(
        wrapped_residual(lines[:, None, None] - offsets[None, :, None] - phis[None, None, :])
    ).min(axis=1)
    hit = scan < tol
    counts = hit.sum(axis=0)
    # A mispaired phase can pass every line near the tolerance edge, so count
    # ties are broken by total residual, which the true phase wins easily.
    costs = (scan * hit).sum(axis=0)
    phi = float(phis[np.lexsort((costs, -counts))[0]])

    rel = lines[:, None] - offsets[None, :]
    res = wrapped_residual(rel - phi)
    nearest_offset = np.argmin(np.abs(res), axis=1)
    best_res = res[np.arange(len(lines)), nearest_offset]
    inliers = np.abs(best_res) < tol
    if inliers.sum() < max(2, MIN_INLIER_FRACTION * len(lines)):
        raise GridInconsistencyError(
            f"only {int(inliers.sum())}/{len(lines)} lines fit a Braille lattice"
        )
    # Refine the phase with the mean inlier residual, then re-assign.
    phi += float(best_res[inliers].mean())
    res = wrapped_residual(rel - phi)
    nearest_offset = np.argmin(np.abs(res), axis=1)
    best_res = res[np.arange(len(lines)), nearest_offset]
    inliers = np.abs(best_res) < tol

    slots: dict[tuple[int, int], float] = {}
    for i in np.nonzero(inliers)[0]:
        j = int(nearest_offset[i])
        k = int(round((lines[i] - offsets[j] - phi) / period))
        key = (k, j)
        if key not in slots or abs(best_res[i]) < abs(
            slots[key] - (phi + k * period + offsets[j])
        ):
            slots[key] = float(lines[i])

    ks = [k for k, _ in slots]
    k_base = min(ks)
    cells: list[list[float | None]] = []
    for k in range(k_base, max(ks) + 1):
        cells.append([slots.get((k, j)) for j in range(len(offsets))])
    return _complete_cells(cells, offsets, phi, period, k_base)


def _complete_cells(
    cells: list[list[float | None]],
    offsets: np.ndarray,
    phi: float,
    period: float,
    k_base: int,
) -> list[list[float]]:
    """Fill missing slots from an observed neighbour at its pitch offset.

    A cell with some observed lines gets its missing partners synthesized
    relative to the nearest observed slot (preserving local jitter); a fully
    empty cell falls back to the global lattice positions.
    """
    out: list[list[float]] = []
    for i, slot_values in enumerate(cells):
        observed = [(j, v) for j, v in enumerate(slot_values) if v is not None]
        filled: list[float] = []
        for j in range(len(offsets)):
            if slot_values[j] is not None:
                filled.append(slot_values[j])
            elif observed:
                jn, vn = min(observed, key=lambda jv: abs(jv[0] - j))
                filled.append(vn + (offsets[j] - offsets[jn]))
            else:
                filled.append(phi + (k_base + i) * period + offsets[j])
        out.append(filled)
    return out


def build_grid(dots: DotSet, geometry: GridGeometry = DEFAULT_GEOMETRY) -> GridModel:
    """Recover the cell lattice from de-skewed dot positions.

    Dot x/y coordinates are clustered into lines, lines are fitted to the
    periodic cell lattice (pairs of dot columns, triples of dot rows), and
    missing lines are synthesized so every cell spans its full complement.
    Raises GridInconsistencyError when the positions do not fit a lattice
    (for example on random dots).
    """
    if len(dots) < MIN_GRID_DOTS:
        raise GridInconsistencyError(
            f"grid construction needs >= {MIN_GRID_DOTS} dots, got {len(dots)}"
        )
    pitch = geometry.dot_pitch
    merge_gap = LINE_MERGE_FACTOR * pitch
    tol = LATTICE_TOLERANCE_FACTOR * pitch
    x_obs = cluster_lines(dots.xy[:, 0], merge_gap)
    y_obs = cluster_lines(dots.xy[:, 1], merge_gap)

    x_cells = _fit_lattice(x_obs, np.array([0.0, pitch]), geometry.cell_pitch, tol)
    y_cells = _fit_lattice(
        y_obs, np.array([0.0, pitch, 2 * pitch]), geometry.line_pitch, tol
    )

    x_lines = np.array([v for cell in x_cells for v in cell])
    y_lines = np.array([v for cell in y_cells for v in cell])
    if np.any(np.diff(x_lines) <= 0) or np.any(np.diff(y_lines) <= 0):
        raise GridInconsistencyError("fitted lattice lines are not strictly increasing")
    columns = [(2 * i, 2 * i + 1) for i in range(len(x_cells))]
    rows = [(3 * i, 3 * i + 1, 3 * i + 2) for i in range(len(y_cells))]
    return GridModel(x_lines, y_lines, columns, rows, geometry)


@dataclass(frozen=True)
class BrailleCell:
    """One cell's position in the grid and its 6-bit dot pattern."""

    row: int
    col: int
    pattern: int
    bbox: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if not 0 <= self.pattern <= 63:
            raise ValueError(f"cell pattern must be in [0, 63], got {self.pattern}")


@dataclass
class AssignResult:
    """Dots snapped onto the grid: every cell (empty ones included) plus leftovers."""

    cells: list[BrailleCell]
    outliers: np.ndarray                       # indices of dots off the lattice
    collisions: list[tuple[int, int]] = field(default_factory=list)  # (kept, dropped)

    def cell_at(self, row: int, col: int) -> BrailleCell:
        return next(c for c in self.cells if c.row == row and c.col == col)


def assign_dots(
    dots: DotSet, grid: GridModel, snap_radius: float | None = None
) -> AssignResult:
    """Snap each dot to the nearest lattice intersection within ``snap_radius``.

    Each snapped dot sets its cell's pattern bit; dots with no intersection
    in range are reported as outliers; two dots claiming one intersection
    keep the higher confidence and report a collision. Cells with no dots
    are still emitted (empty cells carry meaning as spaces).
    """
    if snap_radius is None:
        snap_radius = SNAP_RADIUS_FACTOR * grid.geometry.dot_pitch
    sites, address = grid.intersections()
    patterns = np.zeros((grid.n_rows, grid.n_cols), dtype=np.int64)
    outliers: list[int] = []
    collisions: list[tuple[int, int]] = []
    claimed: dict[int, int] = {}

    if len(dots):
        tree = cKDTree(sites)
        distance, site_idx = tree.query(dots.xy)
        for dot_idx in range(len(dots)):
            if distance[dot_idx] > snap_radius:
                outliers.append(dot_idx)
                continue
            site = int(site_idx[dot_idx])
            if site in claimed:
                prev = claimed[site]
                if dots.confidence[dot_idx] > dots.confidence[prev]:
                    claimed[site] = dot_idx
                    collisions.append((dot_idx, prev))
                else:
                    collisions.append((prev, dot_idx))
                continue
            claimed[site] = dot_idx
            row, col, bit = address[site]
            patterns[row, col] |= 1 << bit

    cells = [
        BrailleCell(r, c, int(patterns[r, c]), grid.cell_bbox(r, c))
        for r in range(grid.n_rows)
        for c in range(grid.n_cols)
    ]
    return AssignResult(cells, np.array(outliers, dtype=np.intp), collisions)


def decode_cell(cell: BrailleCell) -> str:
    """The Unicode Braille character for this cell's pattern."""
    return chr(BRAILLE_BLOCK_BASE + cell.pattern)


@dataclass
class PageText:
    """Decoded page content, one string of Braille characters per cell row."""

    rows: list[str]

    @property
    def text(self) -> str:
        return "\n".join(self.rows)


def decode_cells(cells: list[BrailleCell]) -> PageText:
    """Row-major decoding of a full cell list into Braille block text."""
    by_pos = {(c.row, c.col): c for c in cells}
    n_rows = max((c.row for c in cells), default=-1) + 1
    n_cols = max((c.col for c in cells), default=-1) + 1
    rows = [
        "".join(
            decode_cell(by_pos[(r, c)]) if (r, c) in by_pos else chr(BRAILLE_BLOCK_BASE)
            for c in range(n_cols)
        )
        for r in range(n_rows)
    ]
    return PageText(rows)


def pattern_grid(cells: list[BrailleCell]) -> np.ndarray:
    """Cell patterns as a (rows, cols) array."""
    n_rows = max((c.row for c in cells), default=-1) + 1
    n_cols = max((c.col for c in cells), default=-1) + 1
    out = np.zeros((n_rows, n_cols), dtype=np.int64)
    for c in cells:
        out[c.row, c.col] = c.pattern
    return out


def mirror_pattern(pattern: int) -> int:
    """Swap a pattern's left and right dot columns (dots 1-3 <-> 4-6)."""
    if not 0 <= pattern <= 63:
        raise ValueError(f"pattern must be in [0, 63], got {pattern}")
    return ((pattern & 0b000111) << 3) | ((pattern & 0b111000) >> 3)


def verso_from_recto(dots: DotSet, page_width: int) -> DotSet:
    """Map a back-page recto dot set to this page's verso dots.

    A dot embossed on the back page's front face is seen from this side
    mirrored about the vertical axis: (x, y) -> (width - 1 - x, y), with the
    side label flipped. Cell dot numbering mirrors 1<->4, 2<->5, 3<->6
    accordingly (see :func:`mirror_pattern`).
    """
    xy = dots.xy.copy()
    xy[:, 0] = page_width - 1 - xy[:, 0]
    return DotSet(
        xy, dots.side.opposite, dots.confidence.copy(), dots.source, page_width, dots.height
    )
