"""Physical Braille layout dimensions expressed in pixels.

Braille spacing is standardized in millimetres, so at a known scan
resolution every lattice distance is fixed up to production jitter.
All detection, grid-building, and evaluation defaults derive from one
:class:`GridGeometry` value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MM_PER_INCH = 25.4

# Standard Braille dimensions (millimetres).
DOT_PITCH_MM = 2.5       # adjacent dot positions inside one cell
DOT_DIAMETER_MM = 1.5
CELL_PITCH_MM = 6.1      # horizontal distance between adjacent cells
LINE_PITCH_MM = 10.0     # vertical distance between adjacent cell rows


@dataclass(frozen=True)
class GridGeometry:
    """Braille lattice spacing at a fixed scan resolution, in pixels."""

    dot_pitch: float
    cell_pitch: float
    line_pitch: float
    dot_diameter: float
    dpi: float = 200.0

    def __post_init__(self) -> None:
        if not (0 < self.dot_pitch < self.cell_pitch < self.line_pitch):
            raise ValueError("expected 0 < dot_pitch < cell_pitch < line_pitch")
        if self.dot_diameter <= 0 or self.dpi <= 0:
            raise ValueError("dot_diameter and dpi must be positive")

    @classmethod
    def at_dpi(cls, dpi: float = 200.0) -> GridGeometry:
        """Standard Braille dimensions converted to pixels at ``dpi``."""
        scale = dpi / MM_PER_INCH
        return cls(
            dot_pitch=DOT_PITCH_MM * scale,
            cell_pitch=CELL_PITCH_MM * scale,
            line_pitch=LINE_PITCH_MM * scale,
            dot_diameter=DOT_DIAMETER_MM * scale,
            dpi=dpi,
        )

    @property
    def dot_radius(self) -> float:
        return self.dot_diameter / 2.0

    @property
    def lobe_area(self) -> float:
        """Expected pixel area of one shading lobe (half the dot disc)."""
        return math.pi * self.dot_radius**2 / 2.0

    @property
    def match_tolerance(self) -> float:
        """Default center-distance tolerance when matching detections to truth."""
        return self.dot_pitch / 3.0

    @property
    def dedupe_radius(self) -> float:
        """Same-side detections closer than this are duplicates of one dot."""
        return 0.5 * self.dot_pitch


DEFAULT_GEOMETRY = GridGeometry.at_dpi(200.0)
