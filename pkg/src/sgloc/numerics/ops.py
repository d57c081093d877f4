"""Differentiable tensor operations.

Every op accepts :class:`Node`, :class:`Tensor`, numpy arrays or Python
scalars. When any input is a Node the result is recorded on that node's
graph and returned as a Node; otherwise the op is evaluated eagerly and a
:class:`Tensor` is returned.
"""
from __future__ import annotations

import warnings

import numpy as np

from .errors import DegenerateRowError, LabelError, NonFiniteError, ShapeError, UndefinedSimilarityError
from .graph import Node
from .tensor import Tensor

BCE_CLAMP = 1e-7


def _arr(x) -> np.ndarray:
    if isinstance(x, Node):
        return x.value
    if isinstance(x, Tensor):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _graph_of(*xs):
    graph = None
    for x in xs:
        if isinstance(x, Node):
            if graph is None:
                graph = x.graph
            elif x.graph is not graph:
                raise ValueError("operands belong to different graphs")
    return graph


def _emit(op, out, inputs, backward_fn):
    graph = _graph_of(*inputs)
    if graph is None:
        return Tensor(out)
    return graph.record(op, out, tuple(inputs), backward_fn)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


# ---------------------------------------------------------------- elementwise

def add(a, b):
    av, bv = _arr(a), _arr(b)
    out = av + bv
    return _emit("add", out, (a, b), lambda g: (_unbroadcast(g, av.shape), _unbroadcast(g, bv.shape)))


def sub(a, b):
    av, bv = _arr(a), _arr(b)
    out = av - bv
    return _emit("sub", out, (a, b), lambda g: (_unbroadcast(g, av.shape), _unbroadcast(-g, bv.shape)))


def mul(a, b):
    av, bv = _arr(a), _arr(b)
    out = av * bv
    return _emit("mul", out, (a, b),
                 lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def div(a, b):
    av, bv = _arr(a), _arr(b)
    out = av / bv

    def backward(g):
        ga = g / bv
        return _unbroadcast(ga, av.shape), _unbroadcast(-ga * out, bv.shape)

    return _emit("div", out, (a, b), backward)


def neg(a):
    return _emit("neg", -_arr(a), (a,), lambda g: (-g,))


def exp(a):
    out = np.exp(_arr(a))
    return _emit("exp", out, (a,), lambda g: (g * out,))


def log(a):
    av = _arr(a)
    return _emit("log", np.log(av), (a,), lambda g: (g / av,))


def sqrt(a):
    out = np.sqrt(_arr(a))
    return _emit("sqrt", out, (a,), lambda g: (g * 0.5 / out,))


def tanh(a):
    out = np.tanh(_arr(a))
    return _emit("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a):
    av = _arr(a)
    out = 0.5 * (1.0 + np.tanh(0.5 * av))
    return _emit("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a):
    av = _arr(a)
    on = av > 0
    return _emit("relu", np.where(on, av, 0.0), (a,), lambda g: (g * on,))


# ---------------------------------------------------------------- linear algebra / shape

def matmul(a, b):
    av, bv = _arr(a), _arr(b)
    if av.ndim < 2 or bv.ndim < 2 or av.shape[-1] != bv.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {av.shape} and {bv.shape}")
    out = np.matmul(av, bv)

    def backward(g):
        ga = np.matmul(g, np.swapaxes(bv, -1, -2))
        gb = np.matmul(np.swapaxes(av, -1, -2), g)
        return _unbroadcast(ga, av.shape), _unbroadcast(gb, bv.shape)

    return _emit("matmul", out, (a, b), backward)


def transpose(a, axes=None):
    av = _arr(a)
    if axes is None:
        axes = tuple(reversed(range(av.ndim)))
    inv = np.argsort(axes)
    return _emit("transpose", np.transpose(av, axes), (a,), lambda g: (np.transpose(g, inv),))


def reshape(a, shape):
    av = _arr(a)
    return _emit("reshape", av.reshape(shape), (a,), lambda g: (g.reshape(av.shape),))


def index(a, key):
    """Basic or advanced indexing; the gradient scatters back with ``np.add.at``."""
    av = _arr(a)
    out = np.array(av[key], dtype=np.float64)

    def backward(g):
        ga = np.zeros_like(av)
        np.add.at(ga, key, g)
        return (ga,)

    return _emit("index", out, (a,), backward)


def concat(xs, axis=0):
    vals = [_arr(x) for x in xs]
    out = np.concatenate(vals, axis=axis)
    bounds = np.cumsum([v.shape[axis] for v in vals])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _emit("concat", out, tuple(xs), backward)


def sum(a, axis=None, keepdims=False):
    av = _arr(a)
    out = np.sum(av, axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, av.shape).copy(),)

    return _emit("sum", np.asarray(out, dtype=np.float64), (a,), backward)


def mean(a, axis=None, keepdims=False):
    av = _arr(a)
    count = av.size if axis is None else np.prod([av.shape[i] for i in np.atleast_1d(axis)])
    return mul(sum(a, axis=axis, keepdims=keepdims), 1.0 / count)


# ---------------------------------------------------------------- softmax family

def _check_mask(mask: np.ndarray):
    if not np.all((mask == 0.0) | (mask == -np.inf)):
        raise ValueError("mask entries must be exactly 0 or -inf")


def masked_softmax(logits, mask=None, axis=-1):
    """Softmax of ``logits + mask`` along ``axis``.

    ``mask`` holds only 0 and -inf. Masked positions come out as exact zeros;
    a row with every entry masked raises :class:`DegenerateRowError`.
    """
    x = _arr(logits)
    if not np.isfinite(x).all():
        raise NonFiniteError("softmax logits contain NaN or Inf")
    if mask is not None:
        mask = np.asarray(mask, dtype=np.float64)
        _check_mask(mask)
        x = x + mask
    top = np.max(x, axis=axis, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise DegenerateRowError("softmax row is fully masked")
    e = np.exp(x - top)
    out = e / np.sum(e, axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

    return _emit("masked_softmax", out, (logits,), backward)


def softmax(logits, axis=-1):
    return masked_softmax(logits, None, axis)


def logsumexp(a, axis=-1, mask=None):
    x = _arr(a)
    if mask is not None:
        mask = np.asarray(mask, dtype=np.float64)
        _check_mask(mask)
        x = x + mask
    top = np.max(x, axis=axis, keepdims=True)
    if not np.all(np.isfinite(top)):
        raise DegenerateRowError("logsumexp row is fully masked")
    e = np.exp(x - top)
    s = np.sum(e, axis=axis, keepdims=True)
    out = np.squeeze(top + np.log(s), axis=axis)
    weights = e / s

    def backward(g):
        return (np.expand_dims(g, axis) * weights,)

    return _emit("logsumexp", out, (a,), backward)


# ---------------------------------------------------------------- fused layers

def layer_norm(x, gain, bias, eps=1e-5):
    """Normalise over the last axis, then scale and shift."""
    xv, gv, bv = _arr(x), _arr(gain), _arr(bias)
    mu = xv.mean(axis=-1, keepdims=True)
    centered = xv - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std
    out = xhat * gv + bv

    def backward(g):
        dxhat = g * gv
        dx = inv_std * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return dx, _unbroadcast(g * xhat, gv.shape), _unbroadcast(g, bv.shape)

    return _emit("layer_norm", out, (x, gain, bias), backward)


def conv1d(x, weight, bias):
    """Same-length 1-D convolution over axis -2.

    x: [..., T, C_in], weight: [K, C_in, C_out] with K odd, bias: [C_out].
    Zero padding of (K - 1) / 2 on both ends.
    """
    xv, wv, bv = _arr(x), _arr(weight), _arr(bias)
    K, c_in, c_out = wv.shape
    if K % 2 != 1 or xv.shape[-1] != c_in:
        raise ShapeError(f"conv1d: input {xv.shape} incompatible with kernel {wv.shape}")
    T = xv.shape[-2]
    pad = K // 2
    widths = [(0, 0)] * (xv.ndim - 2) + [(pad, pad), (0, 0)]
    xp = np.pad(xv, widths)
    cols = np.stack([xp[..., k:k + T, :] for k in range(K)], axis=-2)  # [..., T, K, C_in]
    flat = cols.reshape(cols.shape[:-2] + (K * c_in,))
    wflat = wv.reshape(K * c_in, c_out)
    out = flat @ wflat + bv

    def backward(g):
        gw = np.tensordot(flat, g, axes=(list(range(flat.ndim - 1)), list(range(g.ndim - 1))))
        gb = g.reshape(-1, c_out).sum(axis=0)
        gcols = (g @ wflat.T).reshape(cols.shape)
        gxp = np.zeros_like(xp)
        for k in range(K):
            gxp[..., k:k + T, :] += gcols[..., k, :]
        return gxp[..., pad:pad + T, :], gw.reshape(wv.shape), gb

    return _emit("conv1d", out, (x, weight, bias), backward)


def cosine_similarity(a, b, axis=-1, on_zero="raise"):
    """Cosine of the angle between ``a`` and ``b`` along ``axis`` (broadcasting).

    ``on_zero="raise"`` rejects zero vectors; ``on_zero="zero"`` returns 0 with
    zero gradient for them and emits a warning.
    """
    av, bv = _arr(a), _arr(b)
    if av.shape[axis] != bv.shape[axis]:
        raise ShapeError(f"cosine_similarity: lengths differ, {av.shape} vs {bv.shape}")
    na = np.sqrt(np.sum(av * av, axis=axis, keepdims=True))
    nb = np.sqrt(np.sum(bv * bv, axis=axis, keepdims=True))
    denom = na * nb
    zero = denom == 0.0
    if zero.any():
        if on_zero == "raise":
            raise UndefinedSimilarityError("cosine similarity of a zero vector is undefined")
        warnings.warn("zero vector in cosine similarity; using similarity 0", RuntimeWarning, stacklevel=2)
    safe = np.where(zero, 1.0, denom)
    cos_k = np.where(zero, 0.0, np.sum(av * bv, axis=axis, keepdims=True) / safe)
    out = np.squeeze(cos_k, axis=axis)

    def backward(g):
        gk = np.where(zero, 0.0, np.expand_dims(g, axis))
        na_s = np.where(na == 0.0, 1.0, na)
        nb_s = np.where(nb == 0.0, 1.0, nb)
        ga = gk * (bv / safe - cos_k * av / (na_s * na_s))
        gb = gk * (av / safe - cos_k * bv / (nb_s * nb_s))
        return _unbroadcast(ga, av.shape), _unbroadcast(gb, bv.shape)

    return _emit("cosine_similarity", out, (a, b), backward)


def binary_cross_entropy(pred, label):
    """Summed binary cross-entropy; predictions clamped to [1e-7, 1 - 1e-7]."""
    pv = _arr(pred)
    f = np.asarray(_arr(label), dtype=np.float64)
    if f.shape != pv.shape:
        raise ShapeError(f"binary_cross_entropy: pred {pv.shape} vs label {f.shape}")
    if not np.all((f == 0.0) | (f == 1.0)):
        raise LabelError("labels must be 0 or 1")
    pc = np.clip(pv, BCE_CLAMP, 1.0 - BCE_CLAMP)
    out = -np.sum(f * np.log(pc) + (1.0 - f) * np.log1p(-pc))
    inside = (pv >= BCE_CLAMP) & (pv <= 1.0 - BCE_CLAMP)

    def backward(g):
        return (g * inside * (-(f / pc) + (1.0 - f) / (1.0 - pc)),)

    return _emit("binary_cross_entropy", np.asarray(out), (pred,), backward)
