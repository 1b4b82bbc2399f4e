"""Grayscale raster primitives: conversion, normalization, rotation, integral images.

Images are plain 2-D uint8 numpy arrays of shape (height, width); integral
images are (height + 1, width + 1) int64 cumulative-sum tables with a zero
row and column, so any rectangle sum is four lookups, exactly.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InvalidImageError

GrayImage = np.ndarray
IntegralImage = np.ndarray

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def as_gray(img: np.ndarray) -> GrayImage:
    """Validate an array as a grayscale image and return it as uint8."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidImageError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise InvalidImageError("intensities outside [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def to_grayscale(color: np.ndarray) -> GrayImage:
    """Convert a 3-channel 8-bit image to luminance; pass gray through."""
    arr = np.asarray(color)
    if arr.size == 0:
        raise InvalidImageError("empty image")
    if arr.ndim == 2:
        return as_gray(arr)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise InvalidImageError(f"expected (h, w) or (h, w, 3), got shape {arr.shape}")
    planes = arr.astype(np.float64)
    luma = (
        LUMA_WEIGHTS[0] * planes[:, :, 0]
        + LUMA_WEIGHTS[1] * planes[:, :, 1]
        + LUMA_WEIGHTS[2] * planes[:, :, 2]
    )
    return np.clip(np.rint(luma), 0, 255).astype(np.uint8)


def background_mode(img: GrayImage) -> int:
    """The page background intensity: the histogram's global peak."""
    counts = np.bincount(as_gray(img).ravel(), minlength=256)
    return int(np.argmax(counts))


def _count_percentile(cdf: np.ndarray, n: int, q: float) -> int:
    # Smallest intensity whose cumulative count reaches ceil(q * n).
    return int(np.searchsorted(cdf, math.ceil(q * n)))


class NormalizedImage(NamedTuple):
    image: GrayImage
    degenerate: bool


def normalize_gray(img: GrayImage) -> NormalizedImage:
    """Linear contrast stretch mapping the 1st/99th intensity percentiles to 0/255.

    Percentiles are order statistics, which makes the stretch exactly
    idempotent. A constant-contrast image (both percentiles equal) is
    returned unchanged with ``degenerate=True``.
    """
    img = as_gray(img)
    counts = np.bincount(img.ravel(), minlength=256)
    cdf = np.cumsum(counts)
    p_low = _count_percentile(cdf, img.size, 0.01)
    p_high = _count_percentile(cdf, img.size, 0.99)
    if p_high <= p_low:
        return NormalizedImage(img.copy(), True)
    scale = 255.0 / (p_high - p_low)
    lut = np.clip(np.rint((np.arange(256) - p_low) * scale), 0, 255).astype(np.uint8)
    return NormalizedImage(lut[img], False)


def compute_integral(img: GrayImage) -> IntegralImage:
    """Cumulative-sum table; entry (y, x) is the sum of all pixels above-left."""
    img = as_gray(img)
    ii = np.zeros((img.shape[0] + 1, img.shape[1] + 1), dtype=np.int64)
    np.cumsum(np.cumsum(img, axis=0, dtype=np.int64), axis=1, out=ii[1:, 1:])
    return ii


def rect_sum(ii: IntegralImage, x, y, w, h):
    """Sum of the pixel rectangle [x, x+w) x [y, y+h); accepts array coordinates."""
    return ii[y + h, x + w] - ii[y, x + w] - ii[y + h, x] + ii[y, x]


def image_center(width: int, height: int) -> tuple[float, float]:
    return ((width - 1) / 2.0, (height - 1) / 2.0)


def rotate_points(
    xy: np.ndarray, angle_deg: float, center: tuple[float, float]
) -> np.ndarray:
    """Rotate (x, y) points about ``center``; same convention as :func:`rotate`.

    A point at p on an image maps to rotate_points(p) on rotate(img, angle).
    """
    theta = math.radians(angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    pts = np.asarray(xy, dtype=np.float64).reshape(-1, 2) - center
    out = np.empty_like(pts)
    out[:, 0] = c * pts[:, 0] - s * pts[:, 1]
    out[:, 1] = s * pts[:, 0] + c * pts[:, 1]
    return out + center


def rotate(img: GrayImage, angle_deg: float) -> GrayImage:
    """Rotate about the image center with bilinear interpolation.

    Output has the source dimensions; samples falling outside the source are
    filled with the page background (histogram mode). Angles are limited to
    +/-45 degrees, well beyond any scanner skew.
    """
    img = as_gray(img)
    if abs(angle_deg) > 45:
        raise ValueError(f"|angle| must be <= 45 degrees, got {angle_deg}")
    if angle_deg == 0:
        return img.copy()
    h, w = img.shape
    cx, cy = image_center(w, h)
    fill = background_mode(img)
    ys, xs = np.mgrid[0:h, 0:w]
    # Inverse map: each output pixel samples the source at R(-angle).
    theta = math.radians(-angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    dx = xs - cx
    dy = ys - cy
    src_x = c * dx - s * dy + cx
    src_y = s * dx + c * dy + cy
    out = ndimage.map_coordinates(
        img.astype(np.float32),
        [src_y, src_x],
        order=1,
        mode="constant",
        cval=float(fill),
    )
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def load_image(path: str | Path) -> np.ndarray:
    """Read a PNG/JPEG file as uint8; (h, w) for gray, (h, w, 3) for color."""
    path = Path(path)
    if not path.is_file():
        raise InvalidImageError(f"image not found: {path}")
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            return np.asarray(im.convert("L"), dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def load_gray(path: str | Path) -> GrayImage:
    """Read an image file and convert to grayscale when needed."""
    return to_grayscale(load_image(path))


def save_image(path: str | Path, img: np.ndarray) -> None:
    """Write a gray or RGB uint8 array as PNG/JPEG, by file suffix."""
    arr = np.asarray(img, dtype=np.uint8)
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr, mode=mode).save(Path(path))
