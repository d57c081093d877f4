"""Alignment and contrastive objectives."""
from __future__ import annotations

import numpy as np

from ..numerics import ops


def alignment_loss(f_hat, f):
    """Summed binary cross-entropy between foreground probabilities and labels."""
    return ops.binary_cross_entropy(f_hat, f)


def eligible_positives(f, s) -> np.ndarray:
    """Indices that may serve as the positive clip: foreground with positive saliency."""
    f, s = np.asarray(f), np.asarray(s)
    return np.flatnonzero((f == 1) & (s > 0))


def sample_positive(f, s, rng: np.random.Generator):
    """Uniformly drawn positive index, or ``None`` when no frame qualifies."""
    idx = eligible_positives(f, s)
    if idx.size == 0:
        return None
    return int(idx[rng.integers(idx.size)])


def negative_mask(s, p: int, widen: bool = False) -> np.ndarray:
    """Additive mask (0 / -inf) keeping the positive and its negatives.

    Negatives are earlier frames with lower saliency than the positive; with
    ``widen`` every other frame with lower saliency counts.
    """
    s = np.asarray(s, dtype=np.float64)
    j = np.arange(s.shape[-1])
    keep = (s < s[p]) & (j != p)
    if not widen:
        keep &= j < p
    keep[p] = True
    return np.where(keep, 0.0, -np.inf)


def intra_loss_at(s_hat, s, positives, tau: float, widen: bool = False):
    """Summed intra-video loss over rows of ``s_hat [B, n]`` with given positives.

    ``positives[b]`` is an index or ``None`` (row skipped). Returns the summed
    loss (scalar, 0.0 if every row is skipped) and the number of skipped rows.
    """
    rows = [b for b, p in enumerate(positives) if p is not None]
    skipped = len(positives) - len(rows)
    if not rows:
        return 0.0, skipped
    s = np.asarray(s, dtype=np.float64).reshape(len(positives), -1)
    pos = np.array([positives[b] for b in rows])
    mask = np.stack([negative_mask(s[b], positives[b], widen) for b in rows])
    logits = ops.index(s_hat, np.array(rows)) * (1.0 / tau)
    lse = ops.logsumexp(logits, axis=-1, mask=mask)
    return ops.sum(lse - ops.index(logits, (np.arange(len(rows)), pos))), skipped


def intra_contrastive_loss(s_hat, f, s, tau: float, rng: np.random.Generator, widen: bool = False):
    """Intra-video loss for one video; returns ``(loss, positive index or None)``.

    A video without an eligible positive contributes 0.
    """
    p = sample_positive(f, s, rng)
    if p is None:
        return 0.0, None
    n = np.shape(ops._arr(s_hat))[-1]
    loss, _ = intra_loss_at(ops.reshape(s_hat, (1, n)), np.reshape(s, (1, n)), [p], tau, widen)
    return loss, p


def inter_contrastive_loss(cross_scores, anchor_cols, tau: float):
    """Mean over anchors of ``-log softmax(cross_scores[a] / tau)[anchor_cols[a]]``.

    ``cross_scores[a, k]`` scores anchor ``a``'s query against video ``k``.
    """
    anchor_cols = np.asarray(anchor_cols, dtype=np.int64)
    logits = cross_scores * (1.0 / tau)
    picked = ops.index(logits, (np.arange(anchor_cols.size), anchor_cols))
    return ops.mean(ops.logsumexp(logits, axis=-1) - picked)


def total_loss(L_a, L_intra, L_inter, lambdas):
    la, li, le = lambdas
    if min(lambdas) < 0:
        raise ValueError("loss weights must be non-negative")
    return L_a * la + L_intra * li + L_inter * le
