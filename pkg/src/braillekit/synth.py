"""Synthetic double-sided Braille page renderer with exact ground truth.

Every detector, the skew estimator, and the grid builder are verified
against pages rendered here. A recto dot is drawn the way a scanner sees an
embossed dot: a bright Gaussian lobe centered half a dot radius above the
dot center and a dark lobe the same distance below; verso dots (embossed
from the back) invert the lobes. Pages can carry Gaussian noise and a known
skew, and the returned annotation holds the exact post-rotation dot
centers, cell patterns, and the injected angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .annotation import PageAnnotation
from .errors import SynthSpecError
from .geometry import DEFAULT_GEOMETRY, GridGeometry
from .grid import BrailleCell, mirror_pattern
from .raster import GrayImage, image_center, rotate, rotate_points


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one rendered page.

    ``recto_patterns`` / ``verso_patterns`` are (rows, cols) arrays of 6-bit
    cell patterns; None with the side enabled means patterns are drawn
    uniformly at random from the seed. ``verso_patterns`` describe the back
    page in its own (back-scan) orientation; rendering mirrors them onto
    this page using the back page's lattice, whose offset from this page's
    lattice is ``verso_lattice_offset`` (None picks the interleaved offset
    of real interpoint embossing, where verso dots fall between recto
    sites; (0, 0) makes the lattices mirror onto each other and collide).
    ``page_size`` is (width, height) and is derived from the grid and
    margin when omitted.
    """

    rows: int = 6
    cols: int = 11
    geometry: GridGeometry = DEFAULT_GEOMETRY
    margin: float = 60.0
    recto_patterns: np.ndarray | None = None
    verso_patterns: np.ndarray | None = None
    recto: bool = True
    verso: bool = False
    skew_degrees: float = 0.0
    noise_sigma: float = 0.0
    background: int = 150
    contrast: int = 60
    page_size: tuple[int, int] | None = None
    lattice_offset: tuple[float, float] = (0.0, 0.0)
    verso_lattice_offset: tuple[float, float] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise SynthSpecError("grid must have at least one row and column")
        if self.noise_sigma < 0:
            raise SynthSpecError("noise sigma must be nonnegative")
        if self.contrast <= 0:
            raise SynthSpecError("dot contrast must be positive")
        if not 0 <= self.background <= 255:
            raise SynthSpecError("background level must be an intensity")

    def size(self) -> tuple[int, int]:
        if self.page_size is not None:
            return self.page_size
        g = self.geometry
        width = math.ceil(2 * self.margin + (self.cols - 1) * g.cell_pitch + g.dot_pitch)
        height = math.ceil(2 * self.margin + (self.rows - 1) * g.line_pitch + 2 * g.dot_pitch)
        return (width, height)


def random_patterns(
    rows: int, cols: int, rng: np.random.Generator, nonempty_margins: bool = False
) -> np.ndarray:
    """Uniform random cell patterns; optionally resample until every border
    row and column contains at least one dot (so the rendered grid extent
    matches the pattern extent exactly)."""
    while True:
        patterns = rng.integers(0, 64, size=(rows, cols), dtype=np.int64)
        if not nonempty_margins:
            return patterns
        if (
            patterns[0].any()
            and patterns[-1].any()
            and patterns[:, 0].any()
            and patterns[:, -1].any()
        ):
            return patterns


def _resolve_patterns(spec: SynthSpec, rng: np.random.Generator) -> SynthSpec:
    recto = spec.recto_patterns
    verso = spec.verso_patterns
    if spec.recto and recto is None:
        recto = random_patterns(spec.rows, spec.cols, rng)
    if spec.verso and verso is None:
        verso = random_patterns(spec.rows, spec.cols, rng)
    for name, patterns in (("recto", recto), ("verso", verso)):
        if patterns is not None:
            patterns = np.asarray(patterns)
            if patterns.shape != (spec.rows, spec.cols):
                raise SynthSpecError(f"{name} patterns must be shaped (rows, cols)")
            if patterns.min() < 0 or patterns.max() > 63:
                raise SynthSpecError(f"{name} patterns must be 6-bit values")
    return replace(spec, recto_patterns=recto, verso_patterns=verso)


def _lattice_origin(spec: SynthSpec) -> tuple[float, float]:
    return (spec.margin + spec.lattice_offset[0], spec.margin + spec.lattice_offset[1])


def _verso_lattice_origin(spec: SynthSpec) -> tuple[float, float]:
    offset = spec.verso_lattice_offset
    if offset is None:
        offset = interleave_offset(spec)
    return (spec.margin + offset[0], spec.margin + offset[1])


def dot_sites(
    spec: SynthSpec, patterns: np.ndarray, origin: tuple[float, float] | None = None
) -> np.ndarray:
    """Dot centers for every set pattern bit, in unskewed page coordinates."""
    g = spec.geometry
    ox, oy = origin if origin is not None else _lattice_origin(spec)
    centers = []
    for r in range(spec.rows):
        for c in range(spec.cols):
            pattern = int(patterns[r, c])
            if not pattern:
                continue
            for bit in range(6):
                if pattern & (1 << bit):
                    col, row = divmod(bit, 3)
                    centers.append(
                        (
                            ox + c * g.cell_pitch + col * g.dot_pitch,
                            oy + r * g.line_pitch + row * g.dot_pitch,
                        )
                    )
    return np.array(centers, dtype=np.float64).reshape(-1, 2)


def _stamp_lobes(
    canvas: np.ndarray, centers: np.ndarray, inverted: bool, spec: SynthSpec
) -> None:
    g = spec.geometry
    # Lobe width keeps interleaved same-class lobes separated even at the
    # tight thresholds a noise-free page produces.
    sigma = g.dot_diameter / 5.0
    offset = g.dot_radius / 2.0
    reach = int(math.ceil(3.5 * sigma))
    coords = np.arange(2 * reach + 1, dtype=np.float64)
    top_sign = -1.0 if inverted else 1.0
    h, w = canvas.shape
    for cx, cy in centers:
        for lobe_dy, sign in ((-offset, top_sign), (offset, -top_sign)):
            ly = cy + lobe_dy
            x0 = int(round(cx)) - reach
            y0 = int(round(ly)) - reach
            gx = np.exp(-((x0 + coords - cx) ** 2) / (2 * sigma**2))
            gy = np.exp(-((y0 + coords - ly) ** 2) / (2 * sigma**2))
            patch = sign * spec.contrast * np.outer(gy, gx)
            ya, yb = max(0, y0), min(h, y0 + len(coords))
            xa, xb = max(0, x0), min(w, x0 + len(coords))
            if ya >= yb or xa >= xb:
                continue
            canvas[ya:yb, xa:xb] += patch[ya - y0 : yb - y0, xa - x0 : xb - x0]


def _mirror_x(pts: np.ndarray, width: int) -> np.ndarray:
    out = pts.copy()
    out[:, 0] = width - 1 - out[:, 0]
    return out


def render_page(spec: SynthSpec) -> tuple[GrayImage, PageAnnotation]:
    """Render one page and its exact annotation.

    Deterministic for a fixed seed. The annotation is in the rendered
    ("original", possibly skewed) frame; its recto dot list, verso dot
    list, cells, and skew angle match the raster exactly.
    """
    rng = np.random.default_rng(spec.seed)
    spec = _resolve_patterns(spec, rng)
    width, height = spec.size()
    g = spec.geometry

    recto_xy = (
        dot_sites(spec, spec.recto_patterns)
        if spec.recto and spec.recto_patterns is not None
        else np.empty((0, 2))
    )
    verso_xy = np.empty((0, 2))
    if spec.verso and spec.verso_patterns is not None:
        verso_xy = _mirror_x(
            dot_sites(spec, spec.verso_patterns, _verso_lattice_origin(spec)), width
        )

    for name, xy in (("recto", recto_xy), ("verso", verso_xy)):
        if len(xy) and (
            xy.min() < -0.5 or xy[:, 0].max() > width - 0.5 or xy[:, 1].max() > height - 0.5
        ):
            raise SynthSpecError(f"{name} dots leave the page; enlarge margin or page_size")

    canvas = np.full((height, width), float(spec.background))
    if spec.noise_sigma > 0:
        canvas += rng.normal(0.0, spec.noise_sigma, size=canvas.shape)
    _stamp_lobes(canvas, recto_xy, inverted=False, spec=spec)
    _stamp_lobes(canvas, verso_xy, inverted=True, spec=spec)
    img = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)

    center = image_center(width, height)
    if spec.skew_degrees:
        img = rotate(img, spec.skew_degrees)
        recto_xy = rotate_points(recto_xy, spec.skew_degrees, center)
        verso_xy = rotate_points(verso_xy, spec.skew_degrees, center)
    for name, xy in (("recto", recto_xy), ("verso", verso_xy)):
        if len(xy) and (
            xy.min() < -0.5 or xy[:, 0].max() > width - 0.5 or xy[:, 1].max() > height - 0.5
        ):
            raise SynthSpecError(f"{name} dots leave the page; enlarge margin or page_size")

    cells = _annotation_cells(spec, center)
    annotation = PageAnnotation(
        image_path="",
        width=width,
        height=height,
        frame="original",
        skew_degrees=spec.skew_degrees,
        recto=recto_xy,
        verso=verso_xy,
        cells=cells,
        meta={"generator": "synthetic", "seed": spec.seed},
    )
    return img, annotation


def _annotation_cells(spec: SynthSpec, center: tuple[float, float]) -> list[BrailleCell]:
    if not spec.recto or spec.recto_patterns is None:
        return []
    g = spec.geometry
    ox, oy = _lattice_origin(spec)
    cells = []
    for r in range(spec.rows):
        for c in range(spec.cols):
            x0 = ox + c * g.cell_pitch
            y0 = oy + r * g.line_pitch
            corners = np.array(
                [
                    [x0, y0],
                    [x0 + g.dot_pitch, y0],
                    [x0, y0 + 2 * g.dot_pitch],
                    [x0 + g.dot_pitch, y0 + 2 * g.dot_pitch],
                ]
            )
            if spec.skew_degrees:
                corners = rotate_points(corners, spec.skew_degrees, center)
            cells.append(
                BrailleCell(
                    r,
                    c,
                    int(spec.recto_patterns[r, c]),
                    (
                        float(corners[:, 0].min()),
                        float(corners[:, 1].min()),
                        float(corners[:, 0].max()),
                        float(corners[:, 1].max()),
                    ),
                )
            )
    return cells


@dataclass
class DoubleSidedPage:
    """A consistent front/back scan pair with cross-filled verso annotations."""

    front_image: GrayImage
    front_annotation: PageAnnotation
    back_image: GrayImage
    back_annotation: PageAnnotation
    collisions: int = 0
    collision_rate: float = 0.0


def render_double_sided(
    front: SynthSpec, back: SynthSpec, interleave: bool = True
) -> DoubleSidedPage:
    """Render both scans of one sheet; each side's verso content is the other
    side's recto content mirrored about the vertical axis.

    Page sizes must match. With ``interleave`` (the default, and how real
    interpoint embossing works) the back lattice is offset so mirrored verso
    dots fall between recto dot sites; pass ``interleave=False`` or explicit
    lattice offsets to study mixed-dot collisions. The reported collision
    count is the number of verso dots landing within one dot diameter of a
    recto dot on the front page; collision_rate divides by the verso count.
    """
    if front.size() != back.size():
        raise SynthSpecError(f"page sizes differ: {front.size()} vs {back.size()}")
    if interleave and front.lattice_offset == (0.0, 0.0) and back.lattice_offset == (0.0, 0.0):
        back = replace(back, lattice_offset=interleave_offset(front))
    front = _resolve_patterns(front, np.random.default_rng(front.seed))
    back = _resolve_patterns(back, np.random.default_rng(back.seed))
    front = replace(
        front,
        verso=True,
        verso_patterns=back.recto_patterns,
        verso_lattice_offset=back.lattice_offset,
    )
    back = replace(
        back,
        verso=True,
        verso_patterns=front.recto_patterns,
        verso_lattice_offset=front.lattice_offset,
    )

    front_img, front_ann = render_page(front)
    back_img, back_ann = render_page(back)

    width, _ = front.size()
    recto = dot_sites(front, front.recto_patterns)
    verso = _mirror_x(dot_sites(back, back.recto_patterns), width)
    collisions = 0
    if len(recto) and len(verso):
        d = np.hypot(
            verso[:, None, 0] - recto[None, :, 0], verso[:, None, 1] - recto[None, :, 1]
        )
        collisions = int((d.min(axis=1) < front.geometry.dot_diameter).sum())
    rate = collisions / len(verso) if len(verso) else 0.0
    return DoubleSidedPage(front_img, front_ann, back_img, back_ann, collisions, rate)


def interleave_offset(spec: SynthSpec) -> tuple[float, float]:
    """Opposite-side lattice offset placing mirrored verso dots between recto sites.

    Horizontally the mirrored dot columns land half a dot pitch away from
    every recto dot column; vertically the verso rows sit midway between
    recto dot rows. The resulting minimum center distance is
    dot_pitch / sqrt(2), beyond one dot diameter at standard geometry.
    """
    g = spec.geometry
    width = spec.size()[0]
    dx = (width - 1 - 2 * spec.margin - g.dot_pitch / 2.0) % g.cell_pitch
    if dx >= g.cell_pitch / 2.0:
        dx -= g.cell_pitch
    return (dx, g.dot_pitch / 2.0)


def mirrored_patterns(patterns: np.ndarray) -> np.ndarray:
    """How a pattern grid reads from the other side of the sheet."""
    flipped = np.fliplr(np.asarray(patterns))
    out = np.empty_like(flipped)
    for idx, value in np.ndenumerate(flipped):
        out[idx] = mirror_pattern(int(value))
    return out
