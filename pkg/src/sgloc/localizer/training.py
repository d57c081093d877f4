"""Mini-batch training of the localizer."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..numerics import Graph, NonFiniteError, OptimizerState, adam_update, ops
from .batching import group_by_shape, pooled_arrays
from .config import LocalizerConfig
from .losses import alignment_loss, inter_contrastive_loss, intra_loss_at, sample_positive, total_loss
from .model import forward
from .params import init_params

log = logging.getLogger(__name__)

TERMS = ("L_a", "L_intra", "L_inter", "total")


class NonFiniteLossError(FloatingPointError):
    def __init__(self, term: str, value: float, step: int | None = None):
        where = "" if step is None else f" at step {step}"
        super().__init__(f"{term} is non-finite ({value!r}){where}")
        self.term = term
        self.value = value


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 300
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0


@dataclass(frozen=True)
class LossBreakdown:
    L_a: float
    L_intra: float
    L_inter: float
    total: float
    skipped: int = 0

    def log_line(self, step: int) -> str:
        return "\t".join([str(step)] + [repr(float(getattr(self, t))) for t in TERMS])


@dataclass
class TrainResult:
    params: dict
    optimizer: OptimizerState
    history: list = field(default_factory=list)

    def log_text(self) -> str:
        return "".join(b.log_line(i) + "\n" for i, b in enumerate(self.history))


@dataclass
class Example:
    """Pooled per-sample arrays plus labels, computed once before training."""
    X: np.ndarray
    S: np.ndarray
    Q: np.ndarray
    f: np.ndarray
    s: np.ndarray

    @classmethod
    def from_sample(cls, sample) -> "Example":
        X, S, Q = pooled_arrays(sample)
        return cls(X, S, Q, np.asarray(sample.f, dtype=np.float64), np.asarray(sample.s, dtype=np.float64))


def objective(p: dict, batch: list[Example], cfg: LocalizerConfig, positives: list):
    """Weighted loss terms over one batch.

    Terms whose weight is zero are not evaluated and are reported as 0.0.
    Per-video terms are averaged over the batch; videos without an eligible
    positive add 0 to the intra-video term. Returns ``(terms dict, skipped)``.
    """
    la, li, le = cfg.lambdas
    heads = (("align",) if la > 0 else ()) + (("saliency",) if li > 0 or le > 0 else ())
    B = len(batch)
    L_a = L_intra = 0.0
    skipped = 0
    order, xs, ss, qs, lengths = [], [], [], [], []
    for idx in group_by_shape(batch):
        X = np.stack([batch[i].X for i in idx])
        S = np.stack([batch[i].S for i in idx])
        Q = np.stack([batch[i].Q for i in idx])
        out = forward(p, X, S, Q, cfg, heads=heads)
        if la > 0:
            L_a = L_a + alignment_loss(out["f_hat"], np.stack([batch[i].f for i in idx]))
        if li > 0 or le > 0:
            n = X.shape[1]
            if li > 0:
                part, skip = intra_loss_at(out["s_hat"], np.stack([batch[i].s for i in idx]),
                                           [positives[i] for i in idx], cfg.tau, cfg.widen_negatives)
                L_intra = L_intra + part
                skipped += skip
            order += idx
            lengths += [n] * len(idx)
            xs.append(ops.reshape(out["X_v"], (len(idx) * n, cfg.d_m)))
            ss.append(ops.reshape(out["S_v"], (len(idx) * n, cfg.d_m)))
            qs.append(out["Q_prime"])
    L_inter = 0.0
    anchors = [r for r, i in enumerate(order) if positives[i] is not None]
    if le > 0 and anchors:
        offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        lengths = np.asarray(lengths)
        # anchor a is scored against every video k at the anchor's positive index, clamped to k's length
        gather = np.array([offsets + np.minimum(positives[order[a]], lengths - 1) for a in anchors])
        flat_x = ops.concat(xs, axis=0) if len(xs) > 1 else xs[0]
        flat_s = ops.concat(ss, axis=0) if len(ss) > 1 else ss[0]
        q_all = ops.concat(qs, axis=0) if len(qs) > 1 else qs[0]
        q_a = ops.reshape(ops.index(q_all, np.array(anchors)), (len(anchors), 1, cfg.d_m))
        cross = (ops.cosine_similarity(ops.index(flat_x, gather), q_a, on_zero="zero")
                 + ops.cosine_similarity(ops.index(flat_s, gather), q_a, on_zero="zero"))
        L_inter = inter_contrastive_loss(cross, anchors, cfg.tau)
    terms = {"L_a": L_a * (1.0 / B), "L_intra": L_intra * (1.0 / B), "L_inter": L_inter}
    terms["total"] = total_loss(terms["L_a"], terms["L_intra"], terms["L_inter"], cfg.lambdas)
    return terms, skipped


def _value(x) -> float:
    return float(np.asarray(ops._arr(x)).reshape(()))


def loss_and_grads(params: dict, batch: list[Example], cfg: LocalizerConfig, positives: list, step=None):
    g = Graph()
    p = g.params(params)
    try:
        terms, skipped = objective(p, batch, cfg, positives)
    except NonFiniteError as exc:
        raise NonFiniteLossError("forward pass", float("nan"), step) from exc
    values = {t: _value(terms[t]) for t in TERMS}
    for t in TERMS:
        if not np.isfinite(values[t]):
            raise NonFiniteLossError(t, values[t], step)
    if hasattr(terms["total"], "graph"):
        grads = g.backward(terms["total"])
    else:
        grads = {k: np.zeros_like(v) for k, v in params.items()}
    return LossBreakdown(skipped=skipped, **values), grads


def train_step(params: dict, opt: OptimizerState, batch: list[Example], cfg: LocalizerConfig,
               rng: np.random.Generator, step: int | None = None):
    """Sample positives, evaluate the weighted objective, backpropagate, apply Adam.

    Returns ``(LossBreakdown, new_params, new_optimizer_state)``.
    """
    if not batch:
        raise ValueError("empty batch")
    positives = [sample_positive(ex.f, ex.s, rng) for ex in batch]
    breakdown, grads = loss_and_grads(params, batch, cfg, positives, step)
    new_params, new_opt = adam_update(opt, params, grads)
    return breakdown, new_params, new_opt


def train(samples, cfg: LocalizerConfig, tcfg: TrainConfig = TrainConfig(), params: dict | None = None,
          on_step=None) -> TrainResult:
    """Train from ``params`` (fresh initialisation when omitted) for ``tcfg.steps`` Adam steps.

    Batches walk through a fresh permutation of the samples each epoch.
    Everything random derives from ``tcfg.seed``.
    """
    cfg.validate()
    if not samples:
        raise ValueError("no training samples")
    init_seq, batch_seq, pos_seq = np.random.SeedSequence(tcfg.seed).spawn(3)
    if params is None:
        params = init_params(cfg, np.random.default_rng(init_seq))
    batch_rng, pos_rng = np.random.default_rng(batch_seq), np.random.default_rng(pos_seq)
    examples = [Example.from_sample(s) for s in samples]
    opt = OptimizerState.init(params, lr=tcfg.lr)
    result = TrainResult(params, opt)
    perm, cursor = batch_rng.permutation(len(examples)), 0
    for step in range(tcfg.steps):
        if cursor >= len(perm):
            perm, cursor = batch_rng.permutation(len(examples)), 0
        chosen = perm[cursor:cursor + tcfg.batch_size]
        cursor += tcfg.batch_size
        breakdown, params, opt = train_step(params, opt, [examples[i] for i in chosen], cfg, pos_rng, step)
        result.history.append(breakdown)
        log.debug(breakdown.log_line(step))
        if on_step is not None:
            on_step(step, breakdown)
    result.params, result.optimizer = params, opt
    return result
