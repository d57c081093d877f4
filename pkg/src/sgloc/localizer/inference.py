"""Relevance fusion, top-k frame selection, pseudo-labels and batched prediction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import Graph
from .batching import group_by_shape, pooled_arrays
from .config import LocalizerConfig
from .model import forward


@dataclass(frozen=True)
class LocalizerOutput:
    f_hat: np.ndarray
    s_hat: np.ndarray
    relevance: np.ndarray
    topk: np.ndarray


def fuse_relevance(f_hat, s_hat, w_f: float, w_s: float) -> np.ndarray:
    return w_f * np.asarray(f_hat, dtype=np.float64) + w_s * np.asarray(s_hat, dtype=np.float64)


def select_topk(relevance, k: int) -> np.ndarray:
    """Indices of the ``k`` largest scores, lower index first on ties."""
    if k < 1:
        raise ValueError("k_frames must be at least 1")
    order = np.argsort(-np.asarray(relevance), kind="stable")
    return order[:k]


def relevance_and_topk(f_hat, s_hat, params, k_frames: int) -> LocalizerOutput:
    f_hat = np.asarray(f_hat, dtype=np.float64)
    s_hat = np.asarray(s_hat, dtype=np.float64)
    r = fuse_relevance(f_hat, s_hat, float(params["w_f"]), float(params["w_s"]))
    return LocalizerOutput(f_hat, s_hat, r, select_topk(r, k_frames))


def pseudo_labels(answer_correct: bool, relevance, r_theta: float):
    """Foreground and saliency targets derived from answer correctness.

    A frame is labelled ``(1, 1)`` when a correct answer meets high relevance
    or a wrong answer meets low relevance (strict comparisons), else ``(0, -1)``.
    Works elementwise on arrays.
    """
    if not 0.0 < r_theta < 1.0:
        raise ValueError(f"r_theta must lie in (0, 1), got {r_theta}")
    r = np.asarray(relevance, dtype=np.float64)
    hit = (r > r_theta) if answer_correct else (r < r_theta)
    f = np.where(hit, 1, 0)
    s = np.where(hit, 1.0, -1.0)
    if f.ndim == 0:
        return int(f), float(s)
    return f, s


def predict(params: dict, cfg: LocalizerConfig, samples, k_frames: int | None = None) -> list[LocalizerOutput]:
    """Forward every sample (grouped by shape) and fuse relevance scores."""
    k = cfg.k_frames if k_frames is None else k_frames
    outputs = [None] * len(samples)
    pooled = [pooled_arrays(s) for s in samples]
    for idx in group_by_shape(samples):
        g = Graph()
        p = g.params(params, trainable=False)
        X, S, Q = (np.stack([pooled[i][j] for i in idx]) for j in range(3))
        res = forward(p, X, S, Q, cfg)
        for row, i in enumerate(idx):
            outputs[i] = relevance_and_topk(res["f_hat"].value[row], res["s_hat"].value[row], params, k)
    return outputs
