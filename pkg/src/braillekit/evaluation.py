"""Detection scoring: tolerance matching, precision/recall/F1, report tables.

Predicted dot centers are matched one-to-one against ground-truth centers
greedily by ascending distance within a tolerance radius; unmatched
predictions are false positives, unmatched truth false negatives. Dataset
metrics pool TP/FP/FN over pages (micro-average) before computing
precision, recall, and F1.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .annotation import DatasetManifest, read_annotation
from .dots import DotSet
from .geometry import DEFAULT_GEOMETRY
from .raster import GrayImage, load_gray

log = logging.getLogger(__name__)


@dataclass
class MatchResult:
    """Counts and matched pairs for one page: (pred index, gt index, distance)."""

    tp: int
    fp: int
    fn: int
    pairs: list[tuple[int, int, float]] = field(default_factory=list)


def match_dots(
    pred: DotSet | np.ndarray, gt: np.ndarray, tolerance: float | None = None
) -> MatchResult:
    """One-to-one greedy matching of predictions to ground truth.

    All (pred, gt) pairs within ``tolerance`` are sorted by ascending
    distance and accepted when both endpoints are still unused. Default
    tolerance is a third of the dot pitch.
    """
    if tolerance is None:
        tolerance = DEFAULT_GEOMETRY.match_tolerance
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    pred_xy = pred.xy if isinstance(pred, DotSet) else np.asarray(pred, dtype=np.float64)
    pred_xy = pred_xy.reshape(-1, 2)
    gt = np.asarray(gt, dtype=np.float64).reshape(-1, 2)

    candidates: list[tuple[float, int, int]] = []
    if len(pred_xy) and len(gt):
        d = np.hypot(
            pred_xy[:, None, 0] - gt[None, :, 0], pred_xy[:, None, 1] - gt[None, :, 1]
        )
        for pi, gi in zip(*np.nonzero(d <= tolerance)):
            candidates.append((float(d[pi, gi]), int(pi), int(gi)))
    candidates.sort()

    used_pred: set[int] = set()
    used_gt: set[int] = set()
    pairs: list[tuple[int, int, float]] = []
    for dist, pi, gi in candidates:
        if pi in used_pred or gi in used_gt:
            continue
        used_pred.add(pi)
        used_gt.add(gi)
        pairs.append((pi, gi, dist))
    tp = len(pairs)
    return MatchResult(tp=tp, fp=len(pred_xy) - tp, fn=len(gt) - tp, pairs=pairs)


def f1_from_precision_recall(precision: float, recall: float) -> float:
    """F1 = 2 * P * R / (P + R)."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class Metrics:
    """Precision/recall/F1, each None when its denominator is zero."""

    precision: float | None
    recall: float | None
    f1: float | None


def precision_recall_f1(m: MatchResult) -> Metrics:
    """Precision, recall, F1 from one match result.

    An undefined metric (zero denominator) is reported as None rather
    than zero.
    """
    precision = m.tp / (m.tp + m.fp) if m.tp + m.fp > 0 else None
    recall = m.tp / (m.tp + m.fn) if m.tp + m.fn > 0 else None
    f1 = (
        f1_from_precision_recall(precision, recall)
        if precision is not None and recall is not None
        else None
    )
    return Metrics(precision, recall, f1)


@dataclass
class PageEval:
    page: str
    book: str
    match: MatchResult | None
    error: str | None = None


@dataclass
class EvalReport:
    """Pooled detection metrics for one method over a page set."""

    method: str
    tolerance: float
    pages: list[PageEval] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def _pooled(self, pages: Iterable[PageEval]) -> MatchResult:
        tp = fp = fn = 0
        for p in pages:
            if p.match is None:
                continue
            tp += p.match.tp
            fp += p.match.fp
            fn += p.match.fn
        return MatchResult(tp, fp, fn)

    @property
    def pooled(self) -> MatchResult:
        return self._pooled(self.pages)

    @property
    def metrics(self) -> Metrics:
        return precision_recall_f1(self.pooled)

    def book_rows(self) -> dict[str, Metrics]:
        books = sorted({p.book for p in self.pages})
        return {
            b: precision_recall_f1(self._pooled(p for p in self.pages if p.book == b))
            for b in books
        }


def evaluate_method(
    detector: Callable[[GrayImage], DotSet],
    manifest: DatasetManifest,
    split: str = "test",
    tolerance: float | None = None,
    method: str = "detector",
) -> EvalReport:
    """Run a detector over a manifest split and score against recto truth.

    Page failures are recorded on the report, not raised; pages where both
    prediction and truth are empty are noted and contribute nothing to the
    pooled counts.
    """
    if tolerance is None:
        tolerance = DEFAULT_GEOMETRY.match_tolerance
    report = EvalReport(method=method, tolerance=tolerance)
    for entry in manifest.select(split=split):
        page_id = entry.image.name
        try:
            img = load_gray(entry.image)
            truth = read_annotation(entry.annotation)
            pred = detector(img)
            result = match_dots(pred, truth.recto, tolerance)
        except Exception as err:  # per-page isolation is the contract
            log.warning("evaluation failed on %s: %s", entry.image, err)
            report.pages.append(PageEval(page_id, entry.book, None, error=str(err)))
            continue
        if result.tp + result.fp == 0 and result.tp + result.fn == 0:
            report.notes.append(f"{page_id}: empty page (no predictions, no truth)")
        report.pages.append(PageEval(page_id, entry.book, result))
    return report


def _format_metrics(m: Metrics) -> tuple[str, str, str]:
    def pct(v: float | None) -> str:
        return f"{100.0 * v:.2f}%" if v is not None else "-"

    return pct(m.precision), pct(m.recall), f"{m.f1:.3f}" if m.f1 is not None else "-"


def render_report(reports: EvalReport | Sequence[EvalReport], per_book: bool = False) -> str:
    """Fixed-width comparison table: Method | Precision | Recall | F1.

    Percentages carry two decimals, F1 three; output is deterministic.
    """
    if isinstance(reports, EvalReport):
        reports = [reports]
    rows: list[tuple[str, str, str, str]] = []
    for r in reports:
        rows.append((r.method, *_format_metrics(r.metrics)))
        if per_book:
            for book, m in r.book_rows().items():
                rows.append((f"  {book}", *_format_metrics(m)))
    header = ("Method", "Precision", "Recall", "F1")
    widths = [
        max(len(header[i]), *(len(row[i]) for row in rows)) if rows else len(header[i])
        for i in range(4)
    ]
    lines = ["  ".join(header[i].ljust(widths[i]) for i in range(4)).rstrip()]
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(4)).rstrip())
    return "\n".join(lines)


def report_to_json(report: EvalReport) -> dict:
    """Machine-readable report document (same schema conventions as annotations)."""
    m = report.metrics
    pooled = report.pooled
    return {
        "schema": "braillekit-report/1",
        "method": report.method,
        "tolerance_px": round(report.tolerance, 2),
        "pooled": {
            "tp": pooled.tp,
            "fp": pooled.fp,
            "fn": pooled.fn,
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
        },
        "books": {
            book: {"precision": bm.precision, "recall": bm.recall, "f1": bm.f1}
            for book, bm in report.book_rows().items()
        },
        "pages": [
            {
                "page": p.page,
                "book": p.book,
                "tp": p.match.tp if p.match else None,
                "fp": p.match.fp if p.match else None,
                "fn": p.match.fn if p.match else None,
                "error": p.error,
            }
            for p in report.pages
        ],
        "notes": report.notes,
    }


def write_report(report: EvalReport, path) -> None:
    from pathlib import Path

    Path(path).write_text(json.dumps(report_to_json(report), indent=2) + "\n", encoding="utf-8")
