"""Composed detection workflows shared by the CLI, service, and evaluation.

Both detectors run on pages that were edge-cleaned and contrast-normalized
the same way, so trained cascades and segmentation thresholds see one
consistent intensity scale. Auto-annotation chains detection, de-skewing,
grid construction, and cell assignment into a preliminary page annotation
for human correction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .annotation import PageAnnotation
from .cascade import Cascade, detect_sliding
from .deskew import SkewEstimate, deskew_page
from .dots import DotSet, Side
from .errors import BrailleKitError, GridInconsistencyError, InsufficientDotsError
from .geometry import DEFAULT_GEOMETRY, GridGeometry
from .grid import GridModel, assign_dots, build_grid
from .raster import GrayImage, as_gray, normalize_gray
from .segmentation import SegmentationConfig, detect_segmentation, suppress_edge_noise

DETECTOR_NAMES = ("segmentation", "cascade")

Detector = Callable[[GrayImage], DotSet]


def prepare_page(img: GrayImage) -> GrayImage:
    """Edge cleanup plus contrast normalization applied before any detector."""
    return normalize_gray(suppress_edge_noise(as_gray(img))).image


def make_detector(
    name: str,
    model: Cascade | None = None,
    geometry: GridGeometry = DEFAULT_GEOMETRY,
    side: Side = Side.RECTO,
    config: SegmentationConfig | None = None,
) -> Detector:
    """Build a one-argument page detector by name.

    The cascade detector finds dots with the trained side's shading; for the
    opposite side the page is flipped vertically (which swaps the lobe
    order) and coordinates are mapped back.
    """
    if name == "segmentation":
        cfg = config or SegmentationConfig()

        def run_segmentation(img: GrayImage) -> DotSet:
            return detect_segmentation(img, side=side, geometry=geometry, config=cfg)

        return run_segmentation
    if name == "cascade":
        if model is None:
            raise ValueError("cascade detector needs a trained model")

        def run_cascade(img: GrayImage) -> DotSet:
            prepared = prepare_page(img)
            if side is Side.RECTO:
                return detect_sliding(prepared, model, geometry=geometry, side=side)
            flipped = detect_sliding(prepared[::-1], model, geometry=geometry, side=side)
            xy = flipped.xy.copy()
            xy[:, 1] = prepared.shape[0] - 1 - xy[:, 1]
            return flipped.replace_xy(xy)

        return run_cascade
    raise ValueError(f"unknown detector {name!r}; expected one of {DETECTOR_NAMES}")


@dataclass
class AutoAnnotation:
    """Detector + de-skew + grid output for one page."""

    annotation: PageAnnotation
    grid: GridModel | None
    deskewed_image: GrayImage
    estimate: SkewEstimate | None
    notes: list[str]


def auto_annotate(
    img: GrayImage,
    detector: Detector,
    geometry: GridGeometry = DEFAULT_GEOMETRY,
    image_path: str = "",
) -> AutoAnnotation:
    """Detect dots, de-skew, build the cell grid, and assign preliminary patterns.

    Failures of the later stages degrade gracefully: without enough dots the
    page passes through unrotated, and without a consistent lattice the
    annotation carries dots but no cells.
    """
    img = as_gray(img)
    notes: list[str] = []
    dots = detector(img)
    estimate: SkewEstimate | None = None
    deskewed = img
    try:
        deskewed, dots, estimate = deskew_page(img, dots)
    except InsufficientDotsError as err:
        notes.append(f"deskew skipped: {err}")

    grid: GridModel | None = None
    cells = []
    try:
        grid = build_grid(dots, geometry)
        assigned = assign_dots(dots, grid)
        cells = assigned.cells
        if len(assigned.outliers):
            notes.append(f"{len(assigned.outliers)} dots off the grid")
        if assigned.collisions:
            notes.append(f"{len(assigned.collisions)} dot collisions on grid sites")
    except (GridInconsistencyError, BrailleKitError) as err:
        notes.append(f"grid construction failed: {err}")

    annotation = PageAnnotation(
        image_path=image_path,
        width=img.shape[1],
        height=img.shape[0],
        frame="deskewed",
        skew_degrees=estimate.angle if estimate else 0.0,
        recto=dots.xy if dots.side is Side.RECTO else np.empty((0, 2)),
        verso=dots.xy if dots.side is Side.VERSO else np.empty((0, 2)),
        cells=cells,
        meta={"detector": dots.source, "notes": notes},
    )
    return AutoAnnotation(annotation, grid, deskewed, estimate, notes)
