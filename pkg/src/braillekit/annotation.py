"""Page annotation files and dataset manifests.

An annotation file is a schema-versioned JSON document holding one page's
ground truth: recto dot centers, verso dot centers, cell patterns with
bounding boxes, the recorded skew angle, and which coordinate frame
("original" or "deskewed") the coordinates live in. A dataset manifest is a
CSV (header ``image,annotation,book,split``) listing pages with their book
and train/test split.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import AnnotationError
from .geometry import DEFAULT_GEOMETRY, GridGeometry
from .grid import BrailleCell, SNAP_RADIUS_FACTOR

SCHEMA_VERSION = "braillekit-annotation/1"

FRAMES = ("original", "deskewed")

PX_DECIMALS = 2
DEGREE_DECIMALS = 3


@dataclass
class PageAnnotation:
    """Ground truth (or detector output) for one scanned page."""

    image_path: str
    width: int
    height: int
    frame: str = "original"
    skew_degrees: float = 0.0
    recto: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    verso: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    cells: list[BrailleCell] = field(default_factory=list)
    revision: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.recto = np.asarray(self.recto, dtype=np.float64).reshape(-1, 2)
        self.verso = np.asarray(self.verso, dtype=np.float64).reshape(-1, 2)

    def validate(self, geometry: GridGeometry = DEFAULT_GEOMETRY) -> None:
        """Raise AnnotationError on any invariant violation."""
        if self.width < 1 or self.height < 1:
            raise AnnotationError("page size must be positive")
        if self.frame not in FRAMES:
            raise AnnotationError(f"unknown coordinate frame {self.frame!r}")
        for name, pts in (("recto", self.recto), ("verso", self.verso)):
            if len(pts) and (
                pts[:, 0].min() < -0.5
                or pts[:, 1].min() < -0.5
                or pts[:, 0].max() > self.width - 0.5
                or pts[:, 1].max() > self.height - 0.5
            ):
                raise AnnotationError(f"{name} dot coordinates outside image bounds")
        for cell in self.cells:
            if not 0 <= cell.pattern <= 63:
                raise AnnotationError(f"cell pattern out of range: {cell.pattern}")
        # Dot sites are derivable from a cell bbox only in an axis-aligned
        # frame, so pattern/dot consistency is checked there alone.
        if self.frame == "deskewed" or self.skew_degrees == 0.0:
            self._validate_cell_dots(geometry)

    def _validate_cell_dots(self, geometry: GridGeometry) -> None:
        snap = SNAP_RADIUS_FACTOR * geometry.dot_pitch
        for cell in self.cells:
            if cell.pattern == 0:
                continue
            for bit in range(6):
                if not cell.pattern & (1 << bit):
                    continue
                sx, sy = _cell_site(cell.bbox, bit)
                if not len(self.recto):
                    raise AnnotationError(
                        f"cell ({cell.row},{cell.col}) has dots but the recto list is empty"
                    )
                d = np.hypot(self.recto[:, 0] - sx, self.recto[:, 1] - sy)
                if d.min() > snap:
                    raise AnnotationError(
                        f"cell ({cell.row},{cell.col}) dot {bit + 1} has no recto dot "
                        f"within {snap:.2f}px of its site"
                    )


def _cell_site(bbox: tuple[float, float, float, float], bit: int) -> tuple[float, float]:
    """Dot site for pattern bit (0-5) from an axis-aligned cell bbox."""
    x0, y0, x1, y1 = bbox
    col, row = divmod(bit, 3)
    return (x1 if col else x0, y0 + row * (y1 - y0) / 2.0)


def _round_points(pts: np.ndarray) -> list[list[float]]:
    return [[round(float(x), PX_DECIMALS), round(float(y), PX_DECIMALS)] for x, y in pts]


def annotation_to_json(a: PageAnnotation) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "image": a.image_path,
        "size": [int(a.width), int(a.height)],
        "frame": a.frame,
        "skew_degrees": round(float(a.skew_degrees), DEGREE_DECIMALS),
        "revision": int(a.revision),
        "recto": _round_points(a.recto),
        "verso": _round_points(a.verso),
        "cells": [
            {
                "row": c.row,
                "col": c.col,
                "pattern": c.pattern,
                "bbox": [round(float(v), PX_DECIMALS) for v in c.bbox],
            }
            for c in a.cells
        ],
        "meta": a.meta,
    }


def annotation_from_json(doc: dict) -> PageAnnotation:
    try:
        if doc.get("schema") != SCHEMA_VERSION:
            raise AnnotationError(f"unsupported annotation schema: {doc.get('schema')!r}")
        cells = []
        for c in doc.get("cells", []):
            pattern = int(c["pattern"])
            if not 0 <= pattern <= 63:
                raise AnnotationError(f"cell pattern out of range: {pattern}")
            cells.append(
                BrailleCell(int(c["row"]), int(c["col"]), pattern, tuple(float(v) for v in c["bbox"]))
            )
        a = PageAnnotation(
            image_path=str(doc["image"]),
            width=int(doc["size"][0]),
            height=int(doc["size"][1]),
            frame=str(doc["frame"]),
            skew_degrees=float(doc["skew_degrees"]),
            recto=np.array(doc.get("recto", []), dtype=np.float64).reshape(-1, 2),
            verso=np.array(doc.get("verso", []), dtype=np.float64).reshape(-1, 2),
            cells=cells,
            revision=int(doc.get("revision", 0)),
            meta=dict(doc.get("meta", {})),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise AnnotationError(f"malformed annotation document: {err}") from err
    a.validate()
    return a


def write_annotation(a: PageAnnotation, path: str | Path) -> None:
    """Validate and write an annotation as schema-versioned JSON."""
    a.validate()
    doc = annotation_to_json(a)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_annotation(path: str | Path) -> PageAnnotation:
    """Read and validate an annotation file; errors carry line context."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise AnnotationError(f"cannot read annotation {path}: {err}") from err
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise AnnotationError(
            f"{path}: parse error at line {err.lineno}, column {err.colno}: {err.msg}"
        ) from err
    return annotation_from_json(doc)


# ---------------------------------------------------------------------------
# Manifests

MANIFEST_COLUMNS = ("image", "annotation", "book", "split")
SPLITS = ("train", "test")


@dataclass(frozen=True)
class ManifestEntry:
    image: Path
    annotation: Path
    book: str
    split: str


@dataclass
class DatasetManifest:
    """Pages with book names and train/test splits, plus any missing files."""

    entries: list[ManifestEntry]
    missing: list[Path] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def select(self, split: str | None = None, book: str | None = None) -> list[ManifestEntry]:
        out = self.entries
        if split is not None:
            out = [e for e in out if e.split == split]
        if book is not None:
            out = [e for e in out if e.book == book]
        return out

    @property
    def split_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.entries:
            counts[e.split] = counts.get(e.split, 0) + 1
        return counts

    @property
    def book_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.entries:
            counts[e.book] = counts.get(e.book, 0) + 1
        return counts


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load a CSV manifest; nonexistent referenced files are listed, not fatal."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise AnnotationError(f"cannot read manifest {path}: {err}") from err
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_COLUMNS:
        raise AnnotationError(
            f"{path}: manifest header must be {','.join(MANIFEST_COLUMNS)}, "
            f"got {reader.fieldnames}"
        )
    root = path.parent
    entries: list[ManifestEntry] = []
    missing: list[Path] = []
    for record in reader:
        if record["split"] not in SPLITS:
            raise AnnotationError(f"{path}: unknown split {record['split']!r}")
        image = root / record["image"]
        annotation = root / record["annotation"]
        for p in (image, annotation):
            if not p.is_file():
                missing.append(p)
        entries.append(ManifestEntry(image, annotation, record["book"], record["split"]))
    return DatasetManifest(entries, missing)


def write_manifest(entries: list[ManifestEntry], path: str | Path) -> None:
    """Write a CSV manifest with paths relative to the manifest location."""
    path = Path(path)
    root = path.parent
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for e in entries:
            writer.writerow(
                [_relative_to(e.image, root), _relative_to(e.annotation, root), e.book, e.split]
            )


def _relative_to(p: Path, root: Path) -> str:
    try:
        return p.resolve().relative_to(root.resolve()).as_posix()
    except ValueError:
        return str(p)


# ---------------------------------------------------------------------------
# Published double-sided Braille dataset adapter

# Per-book training-page counts of the published 114-page release; remaining
# pages are the test split.
DSBI_TRAIN_COUNTS = {
    "Massage": 10,
    "Fundamentals of Massage": 0,
    "Chinese Book 1": 0,
    "Chinese Book 2": 0,
    "Math": 10,
    "Shaver Yang Fengting": 3,
    "Ordinary printed document": 3,
}

_IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")
_RECTO_MARKERS = ("+recto", "_recto", ".recto", "-recto")
_VERSO_MARKERS = ("+verso", "_verso", ".verso", "-verso")


def _parse_dot_file(path: Path) -> np.ndarray:
    """Parse a released dot-label text file into (n, 2) centers.

    Each non-empty line is one record of numeric fields separated by
    semicolons, commas, or whitespace: 2 fields are an (x, y) center,
    4 or more have a leading left;top;right;bottom box (extra fields, such
    as a dot-presence label, are ignored). Fails naming the offending line.
    """
    centers: list[tuple[float, float]] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in line.replace(";", " ").replace(",", " ").split() if f]
        numbers = []
        for f in fields:
            try:
                numbers.append(float(f))
            except ValueError:
                break
        if len(numbers) >= 4:
            left, top, right, bottom = numbers[:4]
            centers.append(((left + right) / 2.0, (top + bottom) / 2.0))
        elif len(numbers) >= 2:
            centers.append((numbers[0], numbers[1]))
        else:
            raise AnnotationError(f"{path}:{lineno}: unparseable dot record {raw!r}")
    return np.array(centers, dtype=np.float64).reshape(-1, 2)


def _find_sibling(image: Path, markers: tuple[str, ...]) -> Path | None:
    for marker in markers:
        for candidate in (
            image.with_name(image.stem + marker + ".txt"),
            image.with_name(image.name + marker + ".txt"),
        ):
            if candidate.is_file():
                return candidate
    return None


def import_dsbi(directory: str | Path, output_dir: str | Path | None = None) -> DatasetManifest:
    """Convert a checkout of the published double-sided Braille dataset.

    Expects one subdirectory per book containing page images with sibling
    ``<page>+recto.txt`` / ``<page>+verso.txt`` dot label files. Converted
    JSON annotations are written under ``output_dir`` (default
    ``<directory>/_braillekit``) and a manifest referencing them is
    returned. Train/test splits follow the published per-book training
    counts, assigning the name-ordered first pages of each book to train.
    """
    from PIL import Image  # lazy: only the size header is needed

    directory = Path(directory)
    if not directory.is_dir():
        raise AnnotationError(f"dataset directory not found: {directory}")
    output_dir = Path(output_dir) if output_dir else directory / "_braillekit"
    output_dir.mkdir(parents=True, exist_ok=True)

    books = sorted(d for d in directory.iterdir() if d.is_dir() and d != output_dir)
    entries: list[ManifestEntry] = []
    for book_dir in books:
        images = sorted(
            p
            for p in book_dir.rglob("*")
            if p.suffix.lower() in _IMAGE_SUFFIXES
            and not any(m in p.stem for m in _RECTO_MARKERS + _VERSO_MARKERS)
        )
        if not images:
            continue
        book = _canonical_book_name(book_dir.name)
        n_train = _train_count_for(book, len(images))
        for page_idx, image in enumerate(images):
            recto_file = _find_sibling(image, _RECTO_MARKERS)
            if recto_file is None:
                raise AnnotationError(f"no recto label file found for {image}")
            verso_file = _find_sibling(image, _VERSO_MARKERS)
            with Image.open(image) as im:
                width, height = im.size
            a = PageAnnotation(
                image_path=str(image),
                width=width,
                height=height,
                frame="original",
                recto=_clip_to_page(_parse_dot_file(recto_file), width, height),
                verso=(
                    _clip_to_page(_parse_dot_file(verso_file), width, height)
                    if verso_file
                    else np.empty((0, 2))
                ),
                meta={"book": book},
            )
            out_path = output_dir / f"{book_dir.name}__{image.stem}.json"
            write_annotation(a, out_path)
            entries.append(
                ManifestEntry(
                    image, out_path, book, "train" if page_idx < n_train else "test"
                )
            )
    if not entries:
        raise AnnotationError(f"no book directories with annotated images under {directory}")
    return DatasetManifest(entries)


def _canonical_book_name(dirname: str) -> str:
    lowered = dirname.lower()
    if "fundamental" in lowered:
        return "Fundamentals of Massage"
    if "massage" in lowered or "anmo" in lowered:
        return "Massage"
    if "math" in lowered:
        return "Math"
    if "shaver" in lowered or "fengting" in lowered:
        return "Shaver Yang Fengting"
    if "ordinary" in lowered or "printed" in lowered:
        return "Ordinary printed document"
    if "chinese" in lowered:
        return "Chinese Book 2" if "2" in lowered.split("chinese", 1)[1] else "Chinese Book 1"
    return dirname


def _train_count_for(book: str, n_pages: int) -> int:
    if book in DSBI_TRAIN_COUNTS:
        return min(DSBI_TRAIN_COUNTS[book], n_pages)
    # Unknown book: keep roughly the published 1/4 train fraction.
    return math.floor(n_pages / 4)


def _clip_to_page(pts: np.ndarray, width: int, height: int) -> np.ndarray:
    if not len(pts):
        return pts
    out = pts.copy()
    out[:, 0] = np.clip(out[:, 0], -0.5, width - 0.5)
    out[:, 1] = np.clip(out[:, 1], -0.5, height - 0.5)
    return out


def with_revision(a: PageAnnotation, revision: int) -> PageAnnotation:
    return replace(a, revision=revision)
