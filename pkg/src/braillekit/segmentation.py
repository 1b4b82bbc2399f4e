"""Dot detection by three-class segmentation and vertical lobe pairing.

Under scanner lighting a raised dot reads as a bright lobe directly above a
dark lobe; a dot embossed from the back side reads with the shading
inverted. The detector classes every pixel as highlight / shadow /
background against a band centred on the page background intensity, groups
each class into connected regions, splits regions wide enough to be merged
neighbours, and pairs vertically adjacent highlight/shadow regions into dot
detections whose position is the center of the pair's union bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .dots import DotSet, Side, suppress_close_dots
from .errors import DegeneratePageError
from .geometry import DEFAULT_GEOMETRY, GridGeometry
from .raster import GrayImage, as_gray, background_mode, normalize_gray

BACKGROUND = 0
HIGHLIGHT = 1
SHADOW = 2

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

SOURCE_NAME = "segmentation"


@dataclass(frozen=True)
class SegmentationConfig:
    """Tunables of the segmentation detector (defaults fit 200 dpi scans)."""

    spread_window: int = 30      # half-width of the mode-centred band for the spread estimate
    threshold_k: float = 3.0     # class thresholds at mode +/- k * spread
    min_region_area: int = 3     # smaller components are speckle
    border_fraction: float = 0.01
    min_border_px: int = 4
    max_width_factor: float = 1.5      # regions wider than this * dot diameter get split
    pair_max_dy_factor: float = 0.8    # vertical centroid gap limit, * dot diameter
    pair_max_dx_factor: float = 0.5    # horizontal centroid offset limit, * dot diameter
    lobe_area_range: tuple[float, float] = (0.2, 3.0)  # accepted highlight area, * lobe area


DEFAULT_CONFIG = SegmentationConfig()


def thresholds_from_histogram(
    img: GrayImage, config: SegmentationConfig = DEFAULT_CONFIG
) -> tuple[float, float]:
    """Adaptive global thresholds (lower, upper) bracketing the background mode.

    The spread is the standard deviation of intensities within
    ``spread_window`` of the mode, so dot lobes far from the background do
    not inflate it. Raises DegeneratePageError when the page has no spread
    (blank or constant image).
    """
    img = as_gray(img)
    mode = background_mode(img)
    values = img[np.abs(img.astype(np.int32) - mode) <= config.spread_window]
    spread = float(values.std())
    if spread == 0.0:
        raise DegeneratePageError("page histogram has no spread around its mode")
    lower = max(mode - config.threshold_k * spread, 0.0)
    upper = min(mode + config.threshold_k * spread, 255.0)
    if not (lower < mode < upper):
        raise DegeneratePageError("background mode too close to the intensity range edge")
    return lower, upper


def suppress_edge_noise(
    img: GrayImage, config: SegmentationConfig = DEFAULT_CONFIG
) -> GrayImage:
    """Replace outlier intensities in the page border band with the background.

    Scanner edges leave dark or bright streaks along the borders that would
    otherwise segment as giant lobes. Pixels in a band of 1% of the short
    dimension (at least ``min_border_px``) whose intensity falls outside the
    segmentation thresholds become the background mode. Interior pixels are
    never touched.
    """
    img = as_gray(img)
    try:
        lower, upper = thresholds_from_histogram(img, config)
    except DegeneratePageError:
        return img.copy()
    h, w = img.shape
    band = max(config.min_border_px, round(config.border_fraction * min(h, w)))
    border = np.zeros((h, w), dtype=bool)
    border[:band, :] = True
    border[-band:, :] = True
    border[:, :band] = True
    border[:, -band:] = True
    outlier = border & ((img < lower) | (img > upper))
    out = img.copy()
    out[outlier] = background_mode(img)
    return out


def segment(img: GrayImage, thresholds: tuple[float, float]) -> np.ndarray:
    """Classify pixels as HIGHLIGHT (> upper), SHADOW (< lower), else BACKGROUND."""
    lower, upper = thresholds
    if not lower < upper:
        raise ValueError("lower threshold must be below upper")
    img = as_gray(img)
    out = np.full(img.shape, BACKGROUND, dtype=np.uint8)
    out[img > upper] = HIGHLIGHT
    out[img < lower] = SHADOW
    return out


@dataclass
class Region:
    """A maximal 8-connected component of one segmentation class."""

    label: int                              # HIGHLIGHT or SHADOW
    area: int
    bbox: tuple[int, int, int, int]         # x0, y0, x1, y1, inclusive
    centroid: tuple[float, float]           # (cx, cy)
    ys: np.ndarray
    xs: np.ndarray

    @property
    def width(self) -> int:
        return self.bbox[2] - self.bbox[0] + 1


def _region_from_coords(label: int, ys: np.ndarray, xs: np.ndarray) -> Region:
    return Region(
        label=label,
        area=len(xs),
        bbox=(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
        centroid=(float(xs.mean()), float(ys.mean())),
        ys=ys,
        xs=xs,
    )


def extract_regions(seg: np.ndarray, min_area: int = 3) -> list[Region]:
    """All 8-connected HIGHLIGHT and SHADOW components of at least ``min_area`` px."""
    regions: list[Region] = []
    for cls in (HIGHLIGHT, SHADOW):
        labeled, count = ndimage.label(seg == cls, structure=EIGHT_CONNECTED)
        if not count:
            continue
        slices = ndimage.find_objects(labeled)
        for i, sl in enumerate(slices):
            ys, xs = np.nonzero(labeled[sl] == i + 1)
            if len(ys) < min_area:
                continue
            regions.append(
                _region_from_coords(cls, ys + sl[0].start, xs + sl[1].start)
            )
    return regions


_MIN_SPLIT_PART = 3  # columns; cuts never shave off bare profile tails


def _profile_valleys(profile: np.ndarray) -> list[int]:
    """Internal local minima of a lightly smoothed column profile."""
    if len(profile) < 2 * _MIN_SPLIT_PART + 1:
        return []
    smooth = np.convolve(profile.astype(np.float64), [0.25, 0.5, 0.25], mode="same")
    valleys = []
    i = _MIN_SPLIT_PART
    stop = len(profile) - _MIN_SPLIT_PART
    while i < stop:
        j = i
        while j + 1 < stop and smooth[j + 1] == smooth[i]:
            j += 1
        if smooth[i] < smooth[i - 1] and smooth[j] < smooth[j + 1]:
            valleys.append((i + j) // 2)
        i = j + 1
    return valleys


def _split_at(region: Region, cuts: list[int]) -> list[Region]:
    parts = []
    x0 = region.bbox[0]
    bounds = [-1] + sorted(cuts) + [region.width - 1]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        mask = (region.xs - x0 > lo) & (region.xs - x0 <= hi)
        if mask.any():
            parts.append(_region_from_coords(region.label, region.ys[mask], region.xs[mask]))
    return parts


def _split_region(region: Region, max_width: int) -> list[Region]:
    if region.width <= max_width:
        return [region]
    x0 = region.bbox[0]
    profile = np.bincount(region.xs - x0, minlength=region.width)
    valleys = _profile_valleys(profile)
    if not valleys:
        # No valley structure: cut at the lowest interior column instead.
        interior = np.arange(_MIN_SPLIT_PART, region.width - _MIN_SPLIT_PART)
        if not len(interior):
            return [region]
        mid = (region.width - 1) / 2.0
        order = np.lexsort((np.abs(interior - mid), profile[interior]))
        valleys = [int(interior[order[0]])]
    parts = []
    for part in _split_at(region, valleys):
        if part.width < region.width:
            parts.extend(_split_region(part, max_width))
        else:  # no progress possible
            parts.append(part)
    return parts


def split_wide_regions(regions: list[Region], max_width: int) -> list[Region]:
    """Split regions whose bounding box is wider than ``max_width``.

    A region is cut at the internal column of its horizontal pixel-count
    profile with the fewest pixels (the valley between merged lobes),
    recursively until every part fits. Regions at or below the limit pass
    through untouched.
    """
    if max_width <= 0:
        raise ValueError("max_width must be positive")
    out: list[Region] = []
    for region in regions:
        out.extend(_split_region(region, max_width))
    return out


def pair_regions_to_dots(
    regions: list[Region],
    side: Side,
    geometry: GridGeometry = DEFAULT_GEOMETRY,
    image_size: tuple[int, int] | None = None,
    config: SegmentationConfig = DEFAULT_CONFIG,
) -> DotSet:
    """Pair top/bottom lobes into dots for one side.

    Recto dots are highlight regions with a shadow region strictly below;
    verso dots invert the stacking. A pair is accepted when the highlight
    lobe's area is plausible for one dot lobe and the shadow centroid sits
    within the configured vertical/horizontal distance. Pairs are assigned
    greedily by ascending centroid distance, each region used at most once;
    the dot sits at the center of the union bounding box and close
    duplicates are suppressed keeping the higher confidence.

    ``image_size`` is (width, height) of the source page; when omitted it is
    inferred from the region extents.
    """
    if image_size is None:
        x_max = max((r.bbox[2] for r in regions), default=0)
        y_max = max((r.bbox[3] for r in regions), default=0)
        image_size = (x_max + 1, y_max + 1)
    width, height = image_size
    top_label = HIGHLIGHT if side is Side.RECTO else SHADOW
    bottom_label = SHADOW if side is Side.RECTO else HIGHLIGHT
    tops = [r for r in regions if r.label == top_label]
    bottoms = [r for r in regions if r.label == bottom_label]

    max_dy = config.pair_max_dy_factor * geometry.dot_diameter
    max_dx = config.pair_max_dx_factor * geometry.dot_diameter
    lo_area = config.lobe_area_range[0] * geometry.lobe_area
    hi_area = config.lobe_area_range[1] * geometry.lobe_area

    candidates: list[tuple[float, int, int]] = []
    if tops and bottoms:
        from scipy.spatial import cKDTree

        bottom_tree = cKDTree([b.centroid for b in bottoms])
        reach = float(np.hypot(max_dx, max_dy))
        near = bottom_tree.query_ball_point([t.centroid for t in tops], reach)
        for ti, top in enumerate(tops):
            for bi in near[ti]:
                bot = bottoms[bi]
                # The area test always applies to the highlight lobe.
                highlight_area = top.area if side is Side.RECTO else bot.area
                if not lo_area <= highlight_area <= hi_area:
                    continue
                dy = bot.centroid[1] - top.centroid[1]
                if not 0.0 < dy <= max_dy:
                    continue
                dx = abs(bot.centroid[0] - top.centroid[0])
                if dx > max_dx:
                    continue
                candidates.append((float(np.hypot(dx, dy)), ti, bi))

    candidates.sort()
    used_top: set[int] = set()
    used_bot: set[int] = set()
    centers = []
    confidences = []
    for dist, ti, bi in candidates:
        if ti in used_top or bi in used_bot:
            continue
        used_top.add(ti)
        used_bot.add(bi)
        bt, bb = tops[ti].bbox, bottoms[bi].bbox
        union = (min(bt[0], bb[0]), min(bt[1], bb[1]), max(bt[2], bb[2]), max(bt[3], bb[3]))
        centers.append(((union[0] + union[2]) / 2.0, (union[1] + union[3]) / 2.0))
        confidences.append(1.0 / (1.0 + dist))

    if not centers:
        return DotSet.empty(side, width, height, SOURCE_NAME)
    xy = np.array(centers)
    confidence = np.array(confidences)
    keep = suppress_close_dots(xy, confidence, geometry.dedupe_radius)
    return DotSet(xy[keep], side, confidence[keep], SOURCE_NAME, width, height)


def detect_segmentation(
    img: GrayImage,
    side: Side = Side.RECTO,
    geometry: GridGeometry = DEFAULT_GEOMETRY,
    config: SegmentationConfig = DEFAULT_CONFIG,
) -> DotSet:
    """Full segmentation pipeline: edge cleanup, normalization, threshold,
    component extraction, wide-region splitting, lobe pairing.

    A blank (degenerate-histogram) page yields an empty dot set rather than
    an error.
    """
    img = as_gray(img)
    height, width = img.shape
    try:
        cleaned = suppress_edge_noise(img, config)
        normed = normalize_gray(cleaned).image
        thresholds = thresholds_from_histogram(normed, config)
    except DegeneratePageError:
        return DotSet.empty(side, width, height, SOURCE_NAME)
    seg = segment(normed, thresholds)
    regions = extract_regions(seg, config.min_region_area)
    regions = split_wide_regions(regions, round(config.max_width_factor * geometry.dot_diameter))
    return pair_regions_to_dots(regions, side, geometry, (width, height), config)
