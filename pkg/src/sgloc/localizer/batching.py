from __future__ import annotations

import numpy as np

from .model import pool_features


def pooled_arrays(sample):
    """``(X_pool [n, d_v], S_pool [n, d_s], Q [n_q, d_t])`` for one sample."""
    return (pool_features(sample.X), pool_features(sample.S, sample.valid_mask()),
            np.asarray(sample.Q, dtype=np.float64))


def group_by_shape(samples) -> list[list[int]]:
    """Sample indices grouped by ``(n_frames, n_q)``, groups in first-seen order."""
    groups: dict[tuple, list[int]] = {}
    for i, s in enumerate(samples):
        groups.setdefault((np.shape(s.f)[0], np.shape(s.Q)[0]), []).append(i)
    return list(groups.values())
