"""Turn localizer outputs into moment predictions and retrieval metrics."""
from __future__ import annotations

import numpy as np

from ..data.samples import saliency_to_rating
from ..retrieval_metrics import MomentPrediction, SaliencyGroundTruth, decode_moments, retrieval_report
from .inference import predict


def normalize_scores(r) -> np.ndarray:
    """Min-max rescale to [0, 1]; a constant vector maps to zeros."""
    r = np.asarray(r, dtype=np.float64)
    span = r.max() - r.min()
    return np.zeros_like(r) if span == 0 else (r - r.min()) / span


def moments_from_relevance(r, threshold: float = 0.5) -> MomentPrediction:
    return decode_moments(normalize_scores(r), threshold)


def evaluate(params: dict, cfg, samples, threshold: float = 0.5):
    """Predictions and metric report for labelled samples.

    Returns ``(report, records)`` where each record holds the query id, decoded
    intervals with scores, and per-frame relevance used as clip scores.
    """
    outputs = predict(params, cfg, samples)
    preds = [moments_from_relevance(o.relevance, threshold) for o in outputs]
    gts = [list(s.intervals) for s in samples]
    truths = [SaliencyGroundTruth(tuple(saliency_to_rating(s.s).tolist())) for s in samples]
    report = retrieval_report(preds, gts, [o.relevance for o in outputs], truths)
    records = [{"query_id": s.video_id, "intervals": [list(i) for i in p.intervals], "scores": p.scores,
                "clip_scores": o.relevance.tolist()} for s, p, o in zip(samples, preds, outputs)]
    return report, records
