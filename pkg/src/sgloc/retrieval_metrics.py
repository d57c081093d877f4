"""Moment retrieval and highlight detection metrics.

Intervals are half-open ``(start, end)`` pairs in frame units (or seconds);
only their overlap matters.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

AVG_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
DEFAULT_POSITIVE_RATING = 4


class MetricWarning(UserWarning):
    pass


@dataclass
class MomentPrediction:
    intervals: list = field(default_factory=list)
    scores: list = field(default_factory=list)

    def __post_init__(self):
        self.intervals = [(float(a), float(b)) for a, b in self.intervals]
        self.scores = [float(s) for s in self.scores]
        if len(self.intervals) != len(self.scores):
            raise ValueError(f"{len(self.intervals)} intervals but {len(self.scores)} scores")
        for (a, b), s in zip(self.intervals, self.scores):
            if not a < b:
                raise ValueError(f"interval ({a}, {b}) must have start < end")
            if not np.isfinite(s):
                raise ValueError("prediction scores must be finite")

    def ranked(self) -> list[tuple[tuple, float]]:
        """(interval, score) pairs by descending score, earlier start first on ties."""
        pairs = list(zip(self.intervals, self.scores))
        return sorted(pairs, key=lambda p: (-p[1], p[0][0]))


@dataclass(frozen=True)
class SaliencyGroundTruth:
    ratings: tuple
    threshold: int = DEFAULT_POSITIVE_RATING

    def __post_init__(self):
        r = np.asarray(self.ratings)
        if r.size and (r.min() < 0 or r.max() > 4 or not np.all(r == np.round(r))):
            raise ValueError("ratings must be integers in 0..4")

    @property
    def relevant(self) -> np.ndarray:
        return np.asarray(self.ratings) >= self.threshold


def decode_moments(scores, threshold: float = 0.5) -> MomentPrediction:
    """Maximal runs of frames scoring above ``threshold``; each run scores its mean."""
    x = np.asarray(scores, dtype=np.float64)
    above = np.concatenate([[False], x > threshold, [False]])
    edges = np.flatnonzero(above[1:] != above[:-1])
    runs = [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]
    pred = MomentPrediction(runs, [float(x[a:b].mean()) for a, b in runs])
    ranked = pred.ranked()
    return MomentPrediction([r[0] for r in ranked], [r[1] for r in ranked])


def temporal_iou(a, b) -> float:
    (a0, a1), (b0, b1) = a, b
    if not (a0 < a1 and b0 < b1):
        raise ValueError(f"intervals must have positive length, got {a} and {b}")
    inter = max(0.0, min(a1, b1) - max(a0, b0))
    union = (a1 - a0) + (b1 - b0) - inter
    return inter / union


def recall_at_1(preds, gts, threshold: float) -> float:
    """Fraction of queries whose top prediction reaches IoU ``threshold`` with some ground truth."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("IoU threshold must lie in (0, 1]")
    if not preds:
        return 0.0
    hits = 0
    for pred, gt in zip(preds, gts):
        ranked = pred.ranked()
        if ranked and any(temporal_iou(ranked[0][0], g) >= threshold for g in gt):
            hits += 1
    return hits / len(preds)


def greedy_matches(pred: MomentPrediction, gt, threshold: float) -> list[bool]:
    """True-positive flags in ranked order.

    Each prediction claims the unmatched ground truth with the highest IoU at
    or above ``threshold`` (lowest index on ties).
    """
    taken = [False] * len(gt)
    flags = []
    for interval, _ in pred.ranked():
        best, best_iou = -1, -1.0
        for j, g in enumerate(gt):
            if taken[j]:
                continue
            iou = temporal_iou(interval, g)
            if iou >= threshold and iou > best_iou:
                best, best_iou = j, iou
        if best >= 0:
            taken[best] = True
        flags.append(best >= 0)
    return flags


def average_precision(flags, n_relevant: int) -> float:
    """Sum of precision at each hit over the number of relevant items."""
    hits, total = 0, 0.0
    for rank, hit in enumerate(flags, start=1):
        if hit:
            hits += 1
            total += hits / rank
    return total / n_relevant


def moment_map(preds, gts, threshold) -> float:
    """Mean AP over queries at one IoU threshold, or averaged over a sequence of thresholds."""
    if np.ndim(threshold):
        return float(np.mean([moment_map(preds, gts, t) for t in threshold]))
    aps = []
    for q, (pred, gt) in enumerate(zip(preds, gts)):
        if not gt:
            warnings.warn(f"query {q} has no ground-truth interval; excluded from mAP", MetricWarning, stacklevel=2)
            continue
        aps.append(average_precision(greedy_matches(pred, gt, threshold), len(gt)))
    return float(np.mean(aps)) if aps else 0.0


def highlight_metrics(clip_scores, truths) -> tuple[float, float]:
    """Highlight-detection ``(mAP, HIT@1)`` over queries.

    ``clip_scores[q]`` and ``truths[q]`` (a :class:`SaliencyGroundTruth`) cover
    the same clips. Queries without a relevant clip are skipped with a warning.
    """
    aps, hits = [], []
    for q, (scores, truth) in enumerate(zip(clip_scores, truths)):
        scores = np.asarray(scores, dtype=np.float64)
        relevant = truth.relevant
        if scores.shape != relevant.shape:
            raise ValueError(f"query {q}: {scores.size} scores for {relevant.size} rated clips")
        if not relevant.any():
            warnings.warn(f"query {q} has no relevant clip; excluded from highlight metrics",
                          MetricWarning, stacklevel=2)
            continue
        order = np.argsort(-scores, kind="stable")
        ranked = relevant[order]
        aps.append(average_precision(ranked, int(relevant.sum())))
        hits.append(float(ranked[0]))
    if not aps:
        return 0.0, 0.0
    return float(np.mean(aps)), float(np.mean(hits))


def retrieval_report(preds, gts, clip_scores=None, truths=None) -> dict:
    """Moment and highlight metrics keyed by column name, as fractions in [0, 1]."""
    report = {
        "R1@0.5": recall_at_1(preds, gts, 0.5),
        "R1@0.7": recall_at_1(preds, gts, 0.7),
        "mAP@0.5": moment_map(preds, gts, 0.5),
        "mAP@0.75": moment_map(preds, gts, 0.75),
        "mAP@Avg": moment_map(preds, gts, AVG_THRESHOLDS),
    }
    if clip_scores is not None and truths is not None:
        report["HD mAP"], report["HIT@1"] = highlight_metrics(clip_scores, truths)
    return report
