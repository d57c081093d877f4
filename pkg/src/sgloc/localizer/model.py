"""Forward pass of the frame localizer.

Every function accepts plain arrays or graph nodes for its inputs and
parameters, so the same code serves eager inference, recorded training and
gradient checks. Leading batch axes are allowed throughout: shapes are
``[..., n, d]`` for per-frame tensors and ``[..., n_q, d]`` for queries.
"""
from __future__ import annotations

import numpy as np

from ..numerics import ops
from ..numerics.errors import ShapeError
from .config import MASK_MODES


def _shape(x) -> tuple:
    return tuple(np.shape(ops._arr(x)))


def pool_features(tokens: np.ndarray, valid: np.ndarray | None = None) -> np.ndarray:
    """Mean over the token axis (-2) of ``[..., n, tokens, d]``; invalid tokens are skipped.

    A frame with no valid token pools to zeros.
    """
    tokens = np.asarray(tokens, dtype=np.float64)
    if valid is None:
        return tokens.mean(axis=-2)
    w = np.asarray(valid, dtype=np.float64)[..., None]
    count = w.sum(axis=-2)
    return (tokens * w).sum(axis=-2) / np.maximum(count, 1.0)


def pool_project(sample, params):
    """Per-frame projected features ``(X_v, S_v)``, each ``[n, d_m]``.

    Averaging before the (linear) projection gives the same result as
    projecting every token and averaging afterwards.
    """
    xp = pool_features(sample.X)
    sp = pool_features(sample.S, sample.valid_mask())
    return ops.matmul(xp, params["W_xs"]), ops.matmul(sp, params["W_ss"])


def positional_encoding(length: int, d: int) -> np.ndarray:
    """Fixed sinusoidal table ``[length, d]``: sin on even columns, cos on odd."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(d)
    angle = pos / np.power(10000.0, (i - i % 2) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def assemble_sequence(X_v, S_v, Q, params):
    """Encoder input ``[frames; scene graph; query]`` with per-segment positions and type vectors.

    ``Q`` holds raw query tokens and is projected by ``W_qp`` here.
    """
    n, d = _shape(X_v)[-2:]
    n_q = _shape(Q)[-2]
    pe_n = positional_encoding(n, d)
    q_v = ops.matmul(Q, params["W_qp"])
    return ops.concat([
        X_v + pe_n + params["type_X"],
        S_v + pe_n + params["type_S"],
        q_v + positional_encoding(n_q, d) + params["type_Q"],
    ], axis=-2)


def build_attention_mask(n_frames: int, n_q: int, mode: str = "blocking") -> np.ndarray:
    """Additive attention mask over the ``2n + n_q`` tokens (rows attend to columns)."""
    if mode not in MASK_MODES:
        raise ValueError(f"mask mode must be one of {MASK_MODES}, got {mode!r}")
    size = 2 * n_frames + n_q
    M = np.zeros((size, size))
    frames, graph = slice(0, n_frames), slice(n_frames, 2 * n_frames)
    if mode == "blocking":
        M[frames, graph] = -np.inf
        M[graph, frames] = -np.inf
    elif mode == "strict":
        M[: 2 * n_frames, : 2 * n_frames] = -np.inf
    return M


def _swap(x, a: int, b: int):
    """Swap two axes given as negative offsets."""
    axes = list(range(len(_shape(x))))
    axes[a], axes[b] = axes[b], axes[a]
    return ops.transpose(x, tuple(axes))


def encoder_layer(Z, M, params, prefix: str, m_heads: int, attention: list | None = None):
    lead, (L, d) = _shape(Z)[:-2], _shape(Z)[-2:]
    d_h = d // m_heads

    def heads(W):  # [..., L, d] -> [..., heads, L, d_h]
        return _swap(ops.reshape(ops.matmul(Z, W), lead + (L, m_heads, d_h)), -3, -2)

    q, k, v = heads(params[prefix + "W_Q"]), heads(params[prefix + "W_K"]), heads(params[prefix + "W_V"])
    logits = ops.matmul(q, _swap(k, -2, -1)) * (1.0 / np.sqrt(d_h))
    A = ops.masked_softmax(logits, M)
    if attention is not None:
        attention.append(np.array(ops._arr(A)))
    mixed = ops.reshape(_swap(ops.matmul(A, v), -3, -2), lead + (L, d))
    Z1 = ops.layer_norm(Z + ops.matmul(mixed, params[prefix + "W_O"]),
                        params[prefix + "ln1_g"], params[prefix + "ln1_b"])
    lin = ops.matmul(Z1, params[prefix + "W_lin"]) + params[prefix + "b_lin"]
    return ops.layer_norm(Z1 + lin, params[prefix + "ln2_g"], params[prefix + "ln2_b"])


def n_layers(params) -> int:
    return sum(1 for k in params if k.endswith(".W_Q"))


def encoder_forward(Z0, M, params, m_heads: int, attention: list | None = None):
    """Stack of masked self-attention layers; same shape out as in.

    Pass a list as ``attention`` to collect each layer's attention weights
    ``[..., heads, L, L]``.
    """
    L = _shape(Z0)[-2]
    if M is not None and np.shape(M) != (L, L):
        raise ShapeError(f"mask shape {np.shape(M)} does not match sequence length {L}")
    if _shape(Z0)[-1] % m_heads:
        raise ShapeError(f"model width {_shape(Z0)[-1]} is not divisible by {m_heads} heads")
    Z = Z0
    for i in range(n_layers(params)):
        Z = encoder_layer(Z, M, params, f"layer{i}.", m_heads, attention)
    return Z


def alignment_head(Z_k, params, n_frames: int):
    """Foreground probabilities ``[..., n]`` from the encoder output.

    Frame and scene-graph rows of the same frame are stacked channel-wise,
    query rows are dropped.
    """
    L = _shape(Z_k)[-2]
    if L < 2 * n_frames + 1:
        raise ShapeError(f"encoder output has {L} rows, need at least {2 * n_frames + 1}")
    lead = (slice(None),) * (len(_shape(Z_k)) - 2)
    frames = ops.index(Z_k, lead + (slice(0, n_frames),))
    graph = ops.index(Z_k, lead + (slice(n_frames, 2 * n_frames),))
    h = ops.relu(ops.conv1d(ops.concat([frames, graph], axis=-1), params["conv1_w"], params["conv1_b"]))
    logits = ops.conv1d(h, params["conv2_w"], params["conv2_b"])
    return ops.sigmoid(ops.reshape(logits, _shape(logits)[:-1]))


def question_pool(Q, params):
    """Attention-pooled query vector ``[..., d_m]`` from raw query tokens ``[..., n_q, d_t]``."""
    q_v = ops.matmul(Q, params["W_qp"])
    scores = ops.matmul(q_v, params["W_c"])                       # [..., n_q, 1]
    weights = ops.softmax(scores, axis=-2)
    return ops.sum(q_v * weights, axis=-2)


def saliency_scores(X_v, S_v, Q_prime):
    """``cos(x_i, Q') + cos(s_i, Q')`` for every frame; zero vectors score 0."""
    q = ops.reshape(Q_prime, _shape(Q_prime)[:-1] + (1, _shape(Q_prime)[-1]))
    return (ops.cosine_similarity(X_v, q, on_zero="zero")
            + ops.cosine_similarity(S_v, q, on_zero="zero"))


def forward(params, X_pool, S_pool, Q, cfg, attention: list | None = None, heads=("align", "saliency")):
    """Full forward on pooled inputs ``X_pool [..., n, d_v]``, ``S_pool [..., n, d_s]``, ``Q [..., n_q, d_t]``.

    Returns a dict with ``X_v``, ``S_v``, ``Q_prime`` and, depending on
    ``heads``, ``f_hat`` and ``s_hat``.
    """
    X_v = ops.matmul(X_pool, params["W_xs"])
    S_v = ops.matmul(S_pool, params["W_ss"])
    out = {"X_v": X_v, "S_v": S_v}
    n, n_q = _shape(X_pool)[-2], _shape(Q)[-2]
    if "align" in heads:
        Z0 = assemble_sequence(X_v, S_v, Q, params)
        M = None if cfg.mask_mode == "none" else build_attention_mask(n, n_q, cfg.mask_mode)
        Z_k = encoder_forward(Z0, M, params, cfg.m_heads, attention)
        out["f_hat"] = alignment_head(Z_k, params, n)
    if "saliency" in heads:
        out["Q_prime"] = question_pool(Q, params)
        out["s_hat"] = saliency_scores(X_v, S_v, out["Q_prime"])
    return out
