"""Dot center collections shared by every detector and the grid builder."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Side(enum.Enum):
    """Which side of the page a dot is embossed on.

    A recto dot is raised toward the scanner and reads as a highlight lobe
    above a shadow lobe; a verso dot (embossed from the back) reads with the
    shading inverted.
    """

    RECTO = "recto"
    VERSO = "verso"

    @property
    def opposite(self) -> Side:
        return Side.VERSO if self is Side.RECTO else Side.RECTO


@dataclass
class DotSet:
    """Subpixel dot centers for one side of one page.

    ``xy`` is an (n, 2) float array of (x, y) centers, ``confidence`` a
    matching (n,) array of nonnegative scores. Coordinates must lie on the
    page: within [-0.5, dim - 0.5] of a ``width`` x ``height`` raster.
    """

    xy: np.ndarray
    side: Side
    confidence: np.ndarray
    source: str
    width: int
    height: int

    def __post_init__(self) -> None:
        self.xy = np.asarray(self.xy, dtype=np.float64).reshape(-1, 2)
        self.confidence = np.asarray(self.confidence, dtype=np.float64).reshape(-1)
        if self.confidence.shape[0] != self.xy.shape[0]:
            raise ValueError("confidence length must match dot count")
        if np.any(self.confidence < 0):
            raise ValueError("confidence must be nonnegative")
        if self.width < 1 or self.height < 1:
            raise ValueError("page size must be positive")
        if len(self.xy):
            x, y = self.xy[:, 0], self.xy[:, 1]
            if (
                x.min() < -0.5
                or y.min() < -0.5
                or x.max() > self.width - 0.5
                or y.max() > self.height - 0.5
            ):
                raise ValueError("dot coordinates outside image bounds")

    def __len__(self) -> int:
        return self.xy.shape[0]

    @classmethod
    def empty(cls, side: Side, width: int, height: int, source: str) -> DotSet:
        return cls(np.empty((0, 2)), side, np.empty(0), source, width, height)

    def replace_xy(self, xy: np.ndarray) -> DotSet:
        return DotSet(xy, self.side, self.confidence.copy(), self.source, self.width, self.height)

    def take(self, index: np.ndarray) -> DotSet:
        return DotSet(
            self.xy[index], self.side, self.confidence[index], self.source, self.width, self.height
        )


def suppress_close_dots(xy: np.ndarray, confidence: np.ndarray, radius: float) -> np.ndarray:
    """Greedy non-maximum suppression; returns indices of kept dots.

    Dots are visited in descending confidence (ties broken by original
    order) and kept only when no already-kept dot lies within ``radius``.
    """
    from scipy.spatial import cKDTree

    xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
    n = len(xy)
    if n <= 1:
        return np.arange(n, dtype=np.intp)
    neighbours: dict[int, list[int]] = {}
    for i, j in cKDTree(xy).query_pairs(radius):
        if np.hypot(*(xy[i] - xy[j])) < radius:  # strictly closer only
            neighbours.setdefault(i, []).append(j)
            neighbours.setdefault(j, []).append(i)
    order = np.argsort(-np.asarray(confidence), kind="stable")
    suppressed = np.zeros(n, dtype=bool)
    kept: list[int] = []
    for i in order:
        if suppressed[i]:
            continue
        kept.append(int(i))
        for j in neighbours.get(int(i), ()):
            suppressed[j] = True
    return np.array(sorted(kept), dtype=np.intp)
