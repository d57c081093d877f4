"""Frozen Motifs-style scene-graph feature head.

Turns per-frame object detections into the top-k relation feature vectors
consumed by the localizer. Forward only: weights are loaded from a file or
drawn from a seeded RNG and never updated.

Pipeline::

    object_context          C  = biLSTM([f_i ; W_ctx p_i])
    edge_context            o_i = argmax(W_o LSTM([c_i ; emb(o_{i-1})]))
                            D  = MLP(biLSTM([c_i ; W_d onehot(o_{i-1})]))
    pair_relation_features  s_ij = (W_h d_i) * (W_t d_j)
                            Pr(i->j) = softmax(W_r s_ij)
    topk_relations          keep the k most probable ordered pairs
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .numerics import ShapeError
from .tensorio import read_named_tensors, write_named_tensors

WEIGHTS_FORMAT = "sgloc-sg-head/1"


@dataclass(frozen=True)
class SgConfig:
    d_f: int = 16          # detector feature width
    n_classes: int = 8     # object classes
    d_ctx_label: int = 8   # width of W_ctx p_i
    h_ctx: int = 8         # object-context LSTM width per direction
    d_label: int = 8       # decoder label embedding width
    h_dec: int = 8
    d_wd: int = 8          # width of W_d onehot(o)
    h_edge: int = 8
    d_e: int = 16          # edge context width
    d_s: int = 16          # relation feature width
    n_rel: int = 6         # relation classes, class 0 is "no relation"


@dataclass
class DetectionSet:
    features: np.ndarray     # [n, d_f]
    label_probs: np.ndarray  # [n, n_classes]
    boxes: np.ndarray        # [n, 4] as x1, y1, x2, y2

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.label_probs = np.asarray(self.label_probs, dtype=np.float64)
        self.boxes = np.asarray(self.boxes, dtype=np.float64)
        n = self.features.shape[0] if self.features.ndim == 2 else 0
        if n < 1:
            raise ValueError("a detection set needs at least one object")
        if self.label_probs.ndim != 2 or self.label_probs.shape[0] != n:
            raise ShapeError(f"label_probs shape {self.label_probs.shape} does not match {n} objects")
        if self.boxes.shape != (n, 4):
            raise ShapeError(f"boxes shape {self.boxes.shape}, expected ({n}, 4)")
        if np.any(self.label_probs < 0) or np.any(np.abs(self.label_probs.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("label distributions must be non-negative and sum to 1")
        if np.any(self.boxes[:, 0] >= self.boxes[:, 2]) or np.any(self.boxes[:, 1] >= self.boxes[:, 3]):
            raise ValueError("boxes must satisfy x1 < x2 and y1 < y2")

    def __len__(self):
        return self.features.shape[0]


@dataclass
class RelationFeatureSet:
    features: np.ndarray       # [m, d_s]
    sources: np.ndarray        # [m] int
    targets: np.ndarray        # [m] int
    probabilities: np.ndarray  # [m], non-increasing

    @property
    def count(self) -> int:
        return len(self.probabilities)


@dataclass
class PairRelations:
    features: np.ndarray        # [n(n-1), d_s]
    sources: np.ndarray
    targets: np.ndarray
    class_probs: np.ndarray     # [n(n-1), n_rel], rows sum to 1
    probabilities: np.ndarray   # max over classes 1.. of class_probs


def _lstm_block(d_in, h):
    return {"W": (4 * h, d_in), "U": (4 * h, h), "b": (4 * h,)}


def weight_shapes(cfg: SgConfig) -> dict[str, tuple]:
    shapes = {
        "W_ctx": (cfg.d_ctx_label, cfg.n_classes),
        "label_embed": (cfg.n_classes + 1, cfg.d_label),  # last row is the start symbol
        "W_o": (cfg.n_classes, cfg.h_dec),
        "W_d": (cfg.d_wd, cfg.n_classes + 1),
        "mlp_W1": (cfg.d_e, 2 * cfg.h_edge),
        "mlp_b1": (cfg.d_e,),
        "mlp_W2": (cfg.d_e, cfg.d_e),
        "mlp_b2": (cfg.d_e,),
        "W_h": (cfg.d_s, cfg.d_e),
        "W_t": (cfg.d_s, cfg.d_e),
        "W_r": (cfg.n_rel, cfg.d_s),
    }
    blocks = {
        "ctx_fw": (cfg.d_f + cfg.d_ctx_label, cfg.h_ctx),
        "ctx_bw": (cfg.d_f + cfg.d_ctx_label, cfg.h_ctx),
        "dec": (2 * cfg.h_ctx + cfg.d_label, cfg.h_dec),
        "edge_fw": (2 * cfg.h_ctx + cfg.d_wd, cfg.h_edge),
        "edge_bw": (2 * cfg.h_ctx + cfg.d_wd, cfg.h_edge),
    }
    for prefix, (d_in, h) in blocks.items():
        for k, shape in _lstm_block(d_in, h).items():
            shapes[f"{prefix}.{k}"] = shape
    return shapes


@dataclass(frozen=True)
class SgParams:
    config: SgConfig
    weights: dict = field(repr=False)

    def __post_init__(self):
        expected = weight_shapes(self.config)
        if set(expected) != set(self.weights):
            raise ShapeError(f"weight names differ from the shape table: {sorted(set(expected) ^ set(self.weights))}")
        frozen = {}
        for name, shape in expected.items():
            arr = np.array(self.weights[name], dtype=np.float64)
            if arr.shape != shape:
                raise ShapeError(f"{name}: shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "weights", frozen)

    @property
    def frozen(self) -> bool:
        return True

    def __getitem__(self, name):
        return self.weights[name]

    @classmethod
    def random(cls, config: SgConfig, seed: int = 0, scale: float = 0.5) -> "SgParams":
        rng = np.random.default_rng(seed)
        weights = {}
        for name, shape in weight_shapes(config).items():
            fan_in = shape[-1] if len(shape) > 1 else 1
            weights[name] = rng.normal(scale=scale / np.sqrt(fan_in), size=shape)
        return cls(config, weights)

    @classmethod
    def zeros(cls, config: SgConfig) -> "SgParams":
        return cls(config, {k: np.zeros(s) for k, s in weight_shapes(config).items()})

    def save(self, path) -> None:
        write_named_tensors(path, self.weights, WEIGHTS_FORMAT, asdict(self.config))

    @classmethod
    def load(cls, path) -> "SgParams":
        header, tensors = read_named_tensors(path, WEIGHTS_FORMAT)
        config = SgConfig(**header)
        # the constructor validates the shape table
        return cls(config, tensors)


# ---------------------------------------------------------------- recurrent pieces

def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_step(x, h, c, W, U, b):
    z = W @ x + U @ h + b
    i, f, g, o = np.split(z, 4)
    c = _sigmoid(f) * c + _sigmoid(i) * np.tanh(g)
    h = _sigmoid(o) * np.tanh(c)
    return h, c


def lstm(xs: np.ndarray, W, U, b) -> np.ndarray:
    """Run an LSTM over rows of ``xs`` from zero initial state; returns all hidden states."""
    hdim = U.shape[1]
    h, c = np.zeros(hdim), np.zeros(hdim)
    out = np.zeros((xs.shape[0], hdim))
    for t, x in enumerate(xs):
        h, c = lstm_step(x, h, c, W, U, b)
        out[t] = h
    return out


def bilstm(xs: np.ndarray, params: SgParams, prefix: str) -> np.ndarray:
    fw = lstm(xs, params[f"{prefix}_fw.W"], params[f"{prefix}_fw.U"], params[f"{prefix}_fw.b"])
    bw = lstm(xs[::-1], params[f"{prefix}_bw.W"], params[f"{prefix}_bw.U"], params[f"{prefix}_bw.b"])[::-1]
    return np.concatenate([fw, bw], axis=1)


# ---------------------------------------------------------------- operations

def object_context(dets: DetectionSet, params: SgParams) -> np.ndarray:
    cfg = params.config
    if dets.features.shape[1] != cfg.d_f or dets.label_probs.shape[1] != cfg.n_classes:
        raise ShapeError(
            f"detections have feature width {dets.features.shape[1]} and {dets.label_probs.shape[1]} classes; "
            f"head expects {cfg.d_f} and {cfg.n_classes}")
    inputs = np.concatenate([dets.features, dets.label_probs @ params["W_ctx"].T], axis=1)
    return bilstm(inputs, params, "ctx")


def edge_context(context: np.ndarray, params: SgParams):
    """Greedy label decoding followed by the edge-context biLSTM and MLP.

    Returns ``(labels, D)``. Argmax ties resolve to the lowest class index.
    """
    cfg = params.config
    n = context.shape[0]
    if n == 0:
        raise ValueError("context must contain at least one object")
    start = cfg.n_classes
    W, U, b = params["dec.W"], params["dec.U"], params["dec.b"]
    h, c = np.zeros(cfg.h_dec), np.zeros(cfg.h_dec)
    labels = np.zeros(n, dtype=np.int64)
    prev = start
    prev_labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        prev_labels[i] = prev
        x = np.concatenate([context[i], params["label_embed"][prev]])
        h, c = lstm_step(x, h, c, W, U, b)
        labels[i] = int(np.argmax(params["W_o"] @ h))  # np.argmax returns the first maximum
        prev = labels[i]
    edge_in = np.concatenate([context, params["W_d"][:, prev_labels].T], axis=1)
    hidden = bilstm(edge_in, params, "edge")
    mid = np.maximum(hidden @ params["mlp_W1"].T + params["mlp_b1"], 0.0)
    D = mid @ params["mlp_W2"].T + params["mlp_b2"]
    return labels, D


def pair_relation_features(D: np.ndarray, params: SgParams) -> PairRelations:
    """All ordered pairs i != j in (source, target) lexicographic order."""
    n = D.shape[0]
    d_s, n_rel = params.config.d_s, params.config.n_rel
    if n < 2:
        return PairRelations(np.zeros((0, d_s)), np.zeros(0, np.int64), np.zeros(0, np.int64),
                             np.zeros((0, n_rel)), np.zeros(0))
    heads = D @ params["W_h"].T
    tails = D @ params["W_t"].T
    src, tgt = np.array([(i, j) for i in range(n) for j in range(n) if i != j]).T
    feats = heads[src] * tails[tgt]
    logits = feats @ params["W_r"].T
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    class_probs = e / e.sum(axis=1, keepdims=True)
    probs = class_probs[:, 1:].max(axis=1) if n_rel > 1 else class_probs[:, 0]
    return PairRelations(feats, src, tgt, class_probs, probs)


def topk_relations(pairs: PairRelations, k: int) -> RelationFeatureSet:
    if k < 1:
        raise ValueError("k must be at least 1")
    # lexsort: last key is primary; pairs are already in (source, target) order
    order = np.lexsort((np.arange(len(pairs.probabilities)), -pairs.probabilities))[:k]
    return RelationFeatureSet(pairs.features[order], pairs.sources[order], pairs.targets[order],
                              pairs.probabilities[order])


def relation_features(dets: DetectionSet, params: SgParams, k: int) -> RelationFeatureSet:
    context = object_context(dets, params)
    _, D = edge_context(context, params)
    return topk_relations(pair_relation_features(D, params), k)


def frame_relation_tensor(frames: list[DetectionSet], params: SgParams, k: int):
    """Stack per-frame top-k relations into ``S: [n, k, d_s]`` plus a validity mask.

    Frames with fewer than ``k`` relations are zero padded; padded rows are
    flagged invalid so pooling can skip them.
    """
    d_s = params.config.d_s
    S = np.zeros((len(frames), k, d_s))
    valid = np.zeros((len(frames), k), dtype=bool)
    for i, dets in enumerate(frames):
        rel = relation_features(dets, params, k)
        S[i, :rel.count] = rel.features
        valid[i, :rel.count] = True
    return S, valid
