"""Boosted Haar cascade for sliding-window dot detection.

Five Haar-like feature kinds over 20x20 windows, evaluated through integral
images; decision stumps trained with discrete AdaBoost; an attentional
cascade whose stages each reach a target false-positive rate on the
negatives surviving the previous stages while keeping a minimum detection
rate on the positives. Detection slides the window at a fixed stride (dot
size is fixed at a fixed scan resolution, so there is no image pyramid) and
merges overlapping hits by non-maximum suppression.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dots import DotSet, Side, suppress_close_dots
from .errors import CascadeTrainingError, ModelFormatError
from .geometry import DEFAULT_GEOMETRY, GridGeometry
from .raster import GrayImage, as_gray, compute_integral, rect_sum

log = logging.getLogger(__name__)

WINDOW = 20  # training sample and sliding window edge length, px

FORMAT_HEADER = "braillekit-cascade v1"


class FeatureKind(enum.Enum):
    TWO_RECT_HORIZONTAL = "two-rect-horizontal"
    TWO_RECT_VERTICAL = "two-rect-vertical"
    THREE_RECT_HORIZONTAL = "three-rect-horizontal"
    THREE_RECT_VERTICAL = "three-rect-vertical"
    FOUR_RECT_CHECKER = "four-rect-checker"


# Footprint of each kind in multiples of the anchor rect (columns, rows).
_SPANS = {
    FeatureKind.TWO_RECT_HORIZONTAL: (2, 1),
    FeatureKind.TWO_RECT_VERTICAL: (1, 2),
    FeatureKind.THREE_RECT_HORIZONTAL: (3, 1),
    FeatureKind.THREE_RECT_VERTICAL: (1, 3),
    FeatureKind.FOUR_RECT_CHECKER: (2, 2),
}


@dataclass(frozen=True)
class HaarFeature:
    """One Haar-like feature: an anchor rect plus derived neighbours.

    The value is (sum over positive rects) - (sum over negative rects);
    positive and negative areas are equal by construction, so the value of
    any feature on a constant image is zero.
    """

    kind: FeatureKind
    x: int
    y: int
    w: int
    h: int

    def rects(self) -> list[tuple[int, int, int, int, int]]:
        """(x, y, w, h, weight) per rectangle."""
        x, y, w, h = self.x, self.y, self.w, self.h
        k = self.kind
        if k is FeatureKind.TWO_RECT_HORIZONTAL:
            return [(x, y, w, h, 1), (x + w, y, w, h, -1)]
        if k is FeatureKind.TWO_RECT_VERTICAL:
            return [(x, y, w, h, 1), (x, y + h, w, h, -1)]
        if k is FeatureKind.THREE_RECT_HORIZONTAL:
            return [(x, y, w, h, 1), (x + w, y, w, h, -2), (x + 2 * w, y, w, h, 1)]
        if k is FeatureKind.THREE_RECT_VERTICAL:
            return [(x, y, w, h, 1), (x, y + h, w, h, -2), (x, y + 2 * h, w, h, 1)]
        return [
            (x, y, w, h, 1),
            (x + w, y, w, h, -1),
            (x, y + h, w, h, -1),
            (x + w, y + h, w, h, 1),
        ]

    def footprint(self) -> tuple[int, int]:
        mx, my = _SPANS[self.kind]
        return (self.x + mx * self.w, self.y + my * self.h)

    def values_at(self, ii: np.ndarray, ox, oy):
        """Feature value(s) for windows with origins (ox, oy) on integral image ``ii``."""
        total = None
        for rx, ry, rw, rh, weight in self.rects():
            x0 = ox + rx
            y0 = oy + ry
            s = ii[y0 + rh, x0 + rw] - ii[y0, x0 + rw] - ii[y0 + rh, x0] + ii[y0, x0]
            total = weight * s if total is None else total + weight * s
        return total


def enumerate_features(
    window: int = WINDOW, stride: int = 2, min_rect: int = 4
) -> list[HaarFeature]:
    """All features of the five kinds on a stride grid of positions and sizes.

    Deterministic order: kind, then anchor height, width, y, x.
    """
    features: list[HaarFeature] = []
    for kind in FeatureKind:
        mx, my = _SPANS[kind]
        for h in range(min_rect, window // my + 1, stride):
            for w in range(min_rect, window // mx + 1, stride):
                for y in range(0, window - my * h + 1, stride):
                    for x in range(0, window - mx * w + 1, stride):
                        features.append(HaarFeature(kind, x, y, w, h))
    return features


@dataclass(frozen=True)
class Stump:
    """Decision stump over one Haar feature: predicts +1 iff polarity*(v - t) > 0."""

    feature: HaarFeature
    threshold: float
    polarity: int
    alpha: float

    def predict_values(self, values: np.ndarray) -> np.ndarray:
        return np.where(self.polarity * (values - self.threshold) > 0, 1.0, -1.0)


@dataclass
class CascadeStage:
    """Weighted stump ensemble; a window passes iff the vote sum reaches the threshold."""

    stumps: list[Stump]
    threshold: float


@dataclass
class Cascade:
    """Ordered rejection stages; a window is a detection iff it passes every stage."""

    window: int
    stages: list[CascadeStage]

    def __post_init__(self) -> None:
        if not self.stages:
            raise ValueError("a cascade needs at least one stage")


# ---------------------------------------------------------------------------
# Feature-matrix machinery for training


_STD_FLOOR = 1.0  # intensity levels; keeps blank windows from exploding


def window_std(samples: np.ndarray) -> np.ndarray:
    """Per-window intensity standard deviation, floored for flat windows.

    Feature values are divided by this, the usual variance normalization
    that makes stump thresholds independent of page contrast.
    """
    flat = samples.reshape(len(samples), -1).astype(np.float64)
    return np.maximum(flat.std(axis=1), _STD_FLOOR)


def _integral_stack(samples: np.ndarray) -> np.ndarray:
    """Integral images, flattened, for a (n, window, window) uint8 stack."""
    n, h, w = samples.shape
    ii = np.zeros((n, h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(samples, axis=1, dtype=np.int64), axis=2, out=ii[:, 1:, 1:])
    return ii.reshape(n, -1)


def feature_matrix(samples: np.ndarray, features: list[HaarFeature], window: int = WINDOW) -> np.ndarray:
    """(n_samples, n_features) matrix of variance-normalized feature values."""
    samples = np.asarray(samples, dtype=np.uint8)
    if samples.ndim != 3 or samples.shape[1:] != (window, window):
        raise ValueError(f"samples must be (n, {window}, {window})")
    side = window + 1

    corners = {"tl": [], "tr": [], "bl": [], "br": []}
    weights: list[int] = []
    starts = [0]
    for feature in features:
        for rx, ry, rw, rh, weight in feature.rects():
            corners["tl"].append(ry * side + rx)
            corners["tr"].append(ry * side + rx + rw)
            corners["bl"].append((ry + rh) * side + rx)
            corners["br"].append((ry + rh) * side + rx + rw)
            weights.append(weight)
        starts.append(len(weights))
    idx = {k: np.array(v, dtype=np.intp) for k, v in corners.items()}
    wts = np.array(weights, dtype=np.int64)
    reduce_at = np.array(starts[:-1], dtype=np.intp)

    values = np.empty((len(samples), len(features)), dtype=np.float64)
    for lo in range(0, len(samples), 2048):
        hi = min(lo + 2048, len(samples))
        ii = _integral_stack(samples[lo:hi])
        sums = ii[:, idx["br"]] - ii[:, idx["tr"]] - ii[:, idx["bl"]] + ii[:, idx["tl"]]
        sums *= wts
        raw = np.add.reduceat(sums, reduce_at, axis=1)
        values[lo:hi] = raw / window_std(samples[lo:hi])[:, None]
    return values


class _StumpSearch:
    """Exhaustive weighted-error stump search over a fixed feature matrix.

    Sample order along each feature column is sorted once; every round then
    scans cumulative class-weight sums over that order to find the best
    threshold/polarity pair per feature.
    """

    CHUNK = 256

    def __init__(self, values: np.ndarray):
        self.values = values
        self.order = np.argsort(values, axis=0, kind="stable")
        sorted_values = np.take_along_axis(values, self.order, axis=0)
        # Threshold midpoints; splits between equal values are not usable.
        self.can_split = sorted_values[:-1] != sorted_values[1:]
        self.midpoints = (sorted_values[:-1] + sorted_values[1:]) / 2.0
        self.sorted_values = sorted_values

    def best(self, weights: np.ndarray, labels: np.ndarray) -> tuple[int, float, int, float]:
        """Return (feature index, threshold, polarity, weighted error)."""
        n, n_features = self.values.shape
        total_pos = float(weights[labels > 0].sum())
        total_neg = float(weights[labels < 0].sum())
        best = (np.inf, -1, 0.0, 0)  # error, feature, threshold, polarity

        for lo in range(0, n_features, self.CHUNK):
            hi = min(lo + self.CHUNK, n_features)
            order = self.order[:, lo:hi]
            w_sorted = weights[order]
            pos_sorted = np.where(labels[order] > 0, w_sorted, 0.0)
            cum_pos = np.cumsum(pos_sorted, axis=0)
            cum_neg = np.cumsum(w_sorted - pos_sorted, axis=0)
            # Split after rank i: ranks <= i fall below the threshold.
            # polarity +1 predicts +1 above the threshold.
            err_plus = cum_pos[:-1] + (total_neg - cum_neg[:-1])
            err_minus = (total_pos - cum_pos[:-1]) + cum_neg[:-1]
            blocked = ~self.can_split[:, lo:hi]
            err_plus[blocked] = np.inf
            err_minus[blocked] = np.inf

            for polarity, err in ((1, err_plus), (-1, err_minus)):
                flat = int(np.argmin(err))
                rank, col = np.unravel_index(flat, err.shape)
                e = float(err[rank, col])
                if e < best[0]:
                    best = (e, lo + int(col), float(self.midpoints[rank, lo + int(col)]), polarity)

        error, feature_idx, threshold, polarity = best
        if feature_idx < 0:
            raise CascadeTrainingError("no usable stump threshold exists")
        return feature_idx, threshold, polarity, error


class _BoostState:
    """Running discrete-AdaBoost state over a fixed sample set."""

    def __init__(self, values: np.ndarray, labels: np.ndarray, features: list[HaarFeature]):
        if not (np.any(labels > 0) and np.any(labels < 0)):
            raise ValueError("training needs samples of both classes")
        self.values = values
        self.labels = labels.astype(np.float64)
        self.features = features
        self.search = _StumpSearch(values)
        self.weights = np.full(len(labels), 1.0 / len(labels))
        self.stumps: list[Stump] = []
        self.scores = np.zeros(len(labels))

    def step(self) -> Stump:
        feature_idx, threshold, polarity, error = self.search.best(self.weights, self.labels)
        if error >= 0.5:
            raise CascadeTrainingError(
                f"no weak learner better than chance at round {len(self.stumps) + 1}"
            )
        error = max(error, 1e-12)
        alpha = 0.5 * np.log((1.0 - error) / error)
        stump = Stump(self.features[feature_idx], threshold, polarity, float(alpha))
        pred = np.where(polarity * (self.values[:, feature_idx] - threshold) > 0, 1.0, -1.0)
        self.weights *= np.exp(-alpha * self.labels * pred)
        self.weights /= self.weights.sum()
        self.stumps.append(stump)
        self.scores += alpha * pred
        return stump


def train_adaboost(
    samples: np.ndarray,
    labels: np.ndarray,
    rounds: int,
    features: list[HaarFeature] | None = None,
    window: int = WINDOW,
) -> list[Stump]:
    """Discrete AdaBoost over decision stumps on Haar features.

    ``samples`` is (n, window, window) uint8, ``labels`` +/-1. Each round
    picks the stump minimizing the weighted error over every enumerated
    feature (threshold by a scan over sorted feature values), with vote
    weight alpha = ln((1 - err) / err) / 2 and multiplicative weight update.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    features = features if features is not None else enumerate_features(window)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    values = feature_matrix(samples, features, window)
    state = _BoostState(values, labels, features)
    for _ in range(rounds):
        state.step()
    return state.stumps


def _stage_threshold(pos_scores: np.ndarray, min_detection: float) -> float:
    """Largest threshold keeping at least ``min_detection`` of positives."""
    allowed_misses = int(np.floor((1.0 - min_detection) * len(pos_scores)))
    return float(np.sort(pos_scores)[allowed_misses])


def train_cascade(
    pos: np.ndarray,
    neg: np.ndarray,
    stage_targets: tuple[float, float] = (0.995, 0.5),
    max_stages: int = 8,
    max_stumps_per_stage: int = 100,
    features: list[HaarFeature] | None = None,
    window: int = WINDOW,
) -> Cascade:
    """Train an attentional cascade by bootstrapping negatives.

    ``stage_targets`` is (min detection rate d, max false-positive rate f)
    per stage. Each stage adds stumps until its false-positive rate on the
    negatives surviving previous stages drops to f, with the stage threshold
    set to keep detection at d on all positives. Training stops when the
    negatives are exhausted or ``max_stages`` is reached, and fails with the
    stage number when a stage cannot meet its targets within the stump
    budget.
    """
    d, f = stage_targets
    if not (0.0 < f < d <= 1.0):
        raise ValueError("stage targets must satisfy 0 < f < d <= 1")
    features = features if features is not None else enumerate_features(window)
    pos_values = feature_matrix(pos, features, window)
    neg_values = feature_matrix(neg, features, window)

    stages: list[CascadeStage] = []
    current_neg = neg_values
    for stage_idx in range(max_stages):
        values = np.vstack([pos_values, current_neg])
        labels = np.concatenate([np.ones(len(pos_values)), -np.ones(len(current_neg))])
        try:
            state = _BoostState(values, labels, features)
        except ValueError:
            break  # negatives exhausted
        threshold = 0.0
        while True:
            try:
                state.step()
            except CascadeTrainingError as err:
                raise CascadeTrainingError(
                    f"stage {stage_idx}: {err}", stage=stage_idx
                ) from err
            pos_scores = state.scores[: len(pos_values)]
            neg_scores = state.scores[len(pos_values):]
            threshold = _stage_threshold(pos_scores, d)
            fp_rate = float(np.mean(neg_scores >= threshold)) if len(neg_scores) else 0.0
            if fp_rate <= f:
                break
            if len(state.stumps) >= max_stumps_per_stage:
                raise CascadeTrainingError(
                    f"stage {stage_idx} cannot reach fp<={f} within "
                    f"{max_stumps_per_stage} stumps (at {fp_rate:.3f})",
                    stage=stage_idx,
                )
        stages.append(CascadeStage(list(state.stumps), threshold))
        survivors = state.scores[len(pos_values):] >= threshold
        current_neg = current_neg[survivors]
        log.info(
            "stage %d: %d stumps, threshold %.4f, %d negatives survive",
            stage_idx, len(stages[-1].stumps), threshold, len(current_neg),
        )
        if len(current_neg) == 0:
            break
    return Cascade(window, stages)


# ---------------------------------------------------------------------------
# Detection


def scan_candidates(
    img: GrayImage, cascade: Cascade, step: int = 2
) -> tuple[np.ndarray, np.ndarray]:
    """Raw accepted window centers and final-stage margins, before suppression."""
    img = as_gray(img)
    h, w = img.shape
    if h < cascade.window or w < cascade.window:
        raise ValueError(f"image {w}x{h} smaller than the {cascade.window}px window")
    win = cascade.window
    ii = compute_integral(img)
    ii2 = np.zeros((h + 1, w + 1), dtype=np.int64)
    squared = img.astype(np.int64) ** 2
    np.cumsum(np.cumsum(squared, axis=0), axis=1, out=ii2[1:, 1:])

    oy, ox = np.mgrid[0 : h - win + 1 : step, 0 : w - win + 1 : step]
    ox = ox.ravel()
    oy = oy.ravel()
    area = win * win
    sums = rect_sum(ii, ox, oy, win, win).astype(np.float64)
    sq_sums = rect_sum(ii2, ox, oy, win, win).astype(np.float64)
    variance = np.maximum(sq_sums / area - (sums / area) ** 2, 0.0)
    stds = np.maximum(np.sqrt(variance), _STD_FLOOR)

    margins = np.zeros(len(ox))
    for stage in cascade.stages:
        scores = np.zeros(len(ox))
        for stump in stage.stumps:
            values = stump.feature.values_at(ii, ox, oy) / stds
            scores += stump.alpha * np.where(
                stump.polarity * (values - stump.threshold) > 0, 1.0, -1.0
            )
        passed = scores >= stage.threshold
        ox, oy, stds = ox[passed], oy[passed], stds[passed]
        margins = scores[passed] - stage.threshold
    half = cascade.window // 2
    centers = np.stack([ox + half, oy + half], axis=1).astype(np.float64)
    return centers, margins


def _merge_candidates(
    centers: np.ndarray, margins: np.ndarray, radius: float
) -> tuple[np.ndarray, np.ndarray]:
    """Non-maximum suppression keeping the highest confidence per cluster.

    Candidates tied at the cluster maximum (the typical case for very small
    ensembles, whose vote margins are coarsely quantized) are averaged, so
    the reported center sits mid-cluster instead of at its scan-order corner.
    """
    from scipy.spatial import cKDTree

    tree = cKDTree(centers)
    order = np.argsort(-margins, kind="stable")
    taken = np.zeros(len(centers), dtype=bool)
    out_xy: list[np.ndarray] = []
    out_conf: list[float] = []
    for i in order:
        if taken[i]:
            continue
        near = [
            j
            for j in tree.query_ball_point(centers[i], radius)
            if not taken[j]
            and np.hypot(*(centers[j] - centers[i])) < radius  # strictly inside
        ]
        taken[near] = True
        tied = [j for j in near if margins[j] >= margins[i] - 1e-9]
        out_xy.append(centers[tied].mean(axis=0))
        out_conf.append(float(margins[i]))
    return np.array(out_xy), np.array(out_conf)


def detect_sliding(
    img: GrayImage,
    cascade: Cascade,
    step: int = 2,
    geometry: GridGeometry = DEFAULT_GEOMETRY,
    side: Side = Side.RECTO,
) -> DotSet:
    """Slide the cascade window at ``step`` px and suppress overlapping hits.

    Single scale: dot size is fixed by the scan resolution. Candidate
    confidence is the final-stage vote margin; non-maximum suppression with
    radius half the dot pitch keeps the strongest hit per dot.
    """
    img = as_gray(img)
    height, width = img.shape
    centers, margins = scan_candidates(img, cascade, step)
    if not len(centers):
        return DotSet.empty(side, width, height, "cascade")
    xy, confidence = _merge_candidates(centers, margins, geometry.dedupe_radius)
    keep = suppress_close_dots(xy, confidence, geometry.dedupe_radius)
    return DotSet(xy[keep], side, confidence[keep], "cascade", width, height)


# ---------------------------------------------------------------------------
# Sample harvesting


def harvest_samples(
    pages,
    geometry: GridGeometry = DEFAULT_GEOMETRY,
    neg_ratio: int = 4,
    window: int = WINDOW,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Cut positive/negative training patches from annotated pages.

    ``pages`` is an iterable of (GrayImage, PageAnnotation). Positives are
    window-sized patches centered on annotated recto dots. Negatives are
    patches whose centers lie at least one dot pitch from every recto dot;
    annotated verso dot centers satisfying that rule are harvested first
    (they are the hard negatives that teach the recto/verso distinction) and
    uniform random centers fill up to ``neg_ratio`` negatives per positive.
    Pages without an annotation are skipped with a warning.
    """
    rng = np.random.default_rng(seed)
    half = window // 2
    pos_patches: list[np.ndarray] = []
    neg_patches: list[np.ndarray] = []

    def cut(img: np.ndarray, cx: float, cy: float) -> np.ndarray | None:
        x0 = int(round(cx)) - half
        y0 = int(round(cy)) - half
        if x0 < 0 or y0 < 0 or y0 + window > img.shape[0] or x0 + window > img.shape[1]:
            return None
        return img[y0 : y0 + window, x0 : x0 + window]

    for img, annotation in pages:
        if annotation is None:
            log.warning("harvest: page without annotation skipped")
            continue
        img = as_gray(img)
        recto = np.asarray(annotation.recto, dtype=np.float64).reshape(-1, 2)
        verso = np.asarray(annotation.verso, dtype=np.float64).reshape(-1, 2)
        page_pos = 0
        for cx, cy in recto:
            patch = cut(img, cx, cy)
            if patch is not None:
                pos_patches.append(patch)
                page_pos += 1

        def far_from_recto(cx: float, cy: float) -> bool:
            if not len(recto):
                return True
            d = np.hypot(recto[:, 0] - cx, recto[:, 1] - cy)
            return bool(d.min() >= geometry.dot_pitch)

        wanted = neg_ratio * page_pos
        page_neg: list[np.ndarray] = []
        for cx, cy in verso:
            if len(page_neg) >= wanted:
                break
            if far_from_recto(cx, cy):
                patch = cut(img, cx, cy)
                if patch is not None:
                    page_neg.append(patch)
        attempts = 0
        while len(page_neg) < wanted and attempts < 200 * wanted:
            attempts += 1
            cx = rng.uniform(half, img.shape[1] - half - 1)
            cy = rng.uniform(half, img.shape[0] - half - 1)
            if far_from_recto(cx, cy):
                patch = cut(img, cx, cy)
                if patch is not None:
                    page_neg.append(patch)
        neg_patches.extend(page_neg)

    pos = np.stack(pos_patches) if pos_patches else np.empty((0, window, window), np.uint8)
    neg = np.stack(neg_patches) if neg_patches else np.empty((0, window, window), np.uint8)
    return pos, neg


# ---------------------------------------------------------------------------
# Persistence: versioned, human-readable, exact round trip


def save_cascade(cascade: Cascade, path: str | Path) -> None:
    lines = [FORMAT_HEADER, f"window {cascade.window}", f"stages {len(cascade.stages)}"]
    for stage in cascade.stages:
        lines.append(f"stage stumps {len(stage.stumps)} threshold {stage.threshold!r}")
        for s in stage.stumps:
            ft = s.feature
            lines.append(
                f"stump {ft.kind.value} {ft.x} {ft.y} {ft.w} {ft.h} "
                f"{s.threshold!r} {s.polarity} {s.alpha!r}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_cascade(path: str | Path) -> Cascade:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ModelFormatError(f"cannot read cascade model: {err}") from err
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != FORMAT_HEADER:
        raise ModelFormatError(f"unknown cascade format header: {lines[:1]}")
    try:
        window = int(lines[1].split()[1])
        n_stages = int(lines[2].split()[1])
        pos = 3
        kinds = {k.value: k for k in FeatureKind}
        stages = []
        for _ in range(n_stages):
            head = lines[pos].split()
            n_stumps, threshold = int(head[2]), float(head[4])
            pos += 1
            stumps = []
            for _ in range(n_stumps):
                tok = lines[pos].split()
                stumps.append(
                    Stump(
                        HaarFeature(kinds[tok[1]], int(tok[2]), int(tok[3]), int(tok[4]), int(tok[5])),
                        float(tok[6]),
                        int(tok[7]),
                        float(tok[8]),
                    )
                )
                pos += 1
            stages.append(CascadeStage(stumps, threshold))
    except (IndexError, KeyError, ValueError) as err:
        raise ModelFormatError(f"malformed cascade model {path}: {err}") from err
    return Cascade(window, stages)
