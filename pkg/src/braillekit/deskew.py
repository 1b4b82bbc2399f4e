"""Skew estimation from detected dot coordinates via projection sharpness.

A Braille page's dots fall on axis-aligned rows and columns once the scan
skew is removed, so the histogram of dot x (and y) coordinates is sharpest
at the true angle: rotating the dot coordinates by a candidate correction
and scoring the variance of the projection histograms turns skew estimation
into a 1-D maximization, searched coarse-to-fine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dots import DotSet
from .errors import InsufficientDotsError
from .raster import GrayImage, as_gray, image_center, rotate, rotate_points

PROJECTION_BIN_PX = 2.0
MIN_DOTS = 20


@dataclass(frozen=True)
class SkewEstimate:
    """Estimated page skew.

    ``angle`` uses the :func:`braillekit.raster.rotate` convention: the page
    content appears rotated by ``angle``, and rotating by ``-angle`` aligns
    the dot rows and columns with the image axes.
    """

    angle: float
    score: float
    candidates: int


def _projection_sharpness(
    xy: np.ndarray,
    angle: float,
    center: tuple[float, float],
    extent: tuple[float, float],
    bin_px: float = PROJECTION_BIN_PX,
) -> float:
    # Undo the candidate skew, then score row + column histogram variance.
    pts = rotate_points(xy, -angle, center)
    margin = 4 * bin_px
    x_edges = np.arange(-margin, extent[0] + margin + bin_px, bin_px)
    y_edges = np.arange(-margin, extent[1] + margin + bin_px, bin_px)
    hx, _ = np.histogram(pts[:, 0], bins=x_edges)
    hy, _ = np.histogram(pts[:, 1], bins=y_edges)
    return float(hx.var() + hy.var())


def estimate_skew(
    dots: DotSet,
    search: float = 5.0,
    coarse_step: float = 0.5,
    fine_step: float = 0.05,
) -> SkewEstimate:
    """Two-pass search for the skew angle maximizing projection sharpness.

    Needs at least 20 dots; a coarse scan over +/-``search`` degrees is
    refined around its optimum at ``fine_step`` resolution.
    """
    if len(dots) < MIN_DOTS:
        raise InsufficientDotsError(
            f"skew estimation needs >= {MIN_DOTS} dots, got {len(dots)}"
        )
    center = image_center(dots.width, dots.height)
    extent = (float(dots.width), float(dots.height))

    def score(angle: float) -> float:
        return _projection_sharpness(dots.xy, angle, center, extent)

    n_coarse = int(round(search / coarse_step))
    coarse = np.arange(-n_coarse, n_coarse + 1) * coarse_step
    coarse_scores = [score(a) for a in coarse]
    best = float(coarse[int(np.argmax(coarse_scores))])

    n_fine = int(round(coarse_step / fine_step))
    fine = best + np.arange(-n_fine, n_fine + 1) * fine_step
    fine = fine[np.abs(fine) <= search + 1e-9]
    fine_scores = [score(a) for a in fine]
    idx = int(np.argmax(fine_scores))
    return SkewEstimate(
        angle=float(fine[idx]),
        score=float(fine_scores[idx]),
        candidates=len(coarse) + len(fine),
    )


def deskew_page(img: GrayImage, dots: DotSet) -> tuple[GrayImage, DotSet, SkewEstimate]:
    """Rotate the page and its dot coordinates so dot rows align with the axes.

    Dots whose centers leave the canvas under the rotation (possible right
    at the page border) are dropped from the returned set.
    """
    img = as_gray(img)
    estimate = estimate_skew(dots)
    rotated = rotate(img, -estimate.angle)
    center = image_center(dots.width, dots.height)
    xy = rotate_points(dots.xy, -estimate.angle, center)
    inside = (
        (xy[:, 0] >= -0.5)
        & (xy[:, 0] <= dots.width - 0.5)
        & (xy[:, 1] >= -0.5)
        & (xy[:, 1] <= dots.height - 0.5)
    )
    moved = dots.take(np.nonzero(inside)[0]).replace_xy(xy[inside])
    return rotated, moved, estimate
