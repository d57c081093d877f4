"""Finite-difference verification of the full training objective on random small models."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..data.samples import VideoSample
from ..numerics import STENCILS, Graph, relative_error, stencil_values
from .config import MASK_MODES, LocalizerConfig
from .losses import sample_positive
from .params import init_params
from .training import Example, objective


@dataclass
class GradcheckReport:
    max_rel_error: float
    worst: str
    n_configs: int
    n_entries: int
    seconds: float
    n_skipped: int = 0


def random_case(rng: np.random.Generator, max_frames: int = 6, max_width: int = 16):
    """A random small config, its parameters, a batch and fixed positives."""
    heads = int(rng.choice([1, 2, 4]))
    # layer norm over two features is constant up to sign, so its input gradient
    # is identically zero and a finite difference only sees roundoff
    d_m = heads * int(rng.integers(max(1, 4 // heads), max_width // heads + 1))
    cfg = LocalizerConfig(
        d_v=int(rng.integers(2, 6)), d_s=int(rng.integers(2, 6)), d_t=int(rng.integers(2, 6)),
        d_m=d_m, k_layers=2, m_heads=heads, k_sg=2,
        tau=float(rng.uniform(0.2, 1.0)),
        lambda_a=float(rng.uniform(0.2, 1.5)), lambda_intra=float(rng.uniform(0.2, 1.5)),
        lambda_inter=float(rng.uniform(0.2, 1.5)),
        mask_mode=str(rng.choice(MASK_MODES)), widen_negatives=bool(rng.integers(2)),
    ).validate()
    params = init_params(cfg, rng)
    for k in params:  # move layer-norm gains and biases off their trivial initial values
        if "ln" in k or k.startswith("type_") or k.endswith("_b"):
            params[k] = params[k] + rng.normal(scale=0.3, size=params[k].shape)
    batch = []
    n_q = int(rng.integers(1, 4))
    for b in range(int(rng.integers(1, 4))):
        n = int(rng.integers(1, max_frames + 1))
        a = int(rng.integers(0, n))
        e = int(rng.integers(a + 1, n + 1))
        f = np.zeros(n)
        f[a:e] = 1.0
        s = np.where(f == 1, rng.uniform(0.2, 1.0, n), -rng.uniform(0.0, 1.0, n))
        sample = VideoSample(f"g{b}", rng.normal(size=(n, 2, cfg.d_v)), rng.normal(size=(n, 2, cfg.d_s)),
                             rng.normal(size=(n_q, cfg.d_t)), f, s, [(a, e)])
        batch.append(Example.from_sample(sample))
    positives = [sample_positive(ex.f, ex.s, rng) for ex in batch]
    return cfg, params, batch, positives


def smooth_derivative(loss_fn, params, name, idx, h, kink_tol=1e-5):
    """Fourth-order central difference, or None when the stencil straddles a kink.

    For a smooth loss the 2-point estimates at steps h and 2h agree to O(h^2);
    a ReLU switching inside the stencil breaks that agreement. The test reads
    loss values only, so it cannot mask an error in the analytic gradient.
    """
    v = stencil_values(loss_fn, params, name, idx, h, (2.0, 1.0, -1.0, -2.0))
    d1 = (v[1.0] - v[-1.0]) / (2.0 * h)
    d2 = (v[2.0] - v[-2.0]) / (4.0 * h)
    roundoff = 64.0 * np.finfo(np.float64).eps * max(abs(x) for x in v.values()) / h
    if abs(d1 - d2) > kink_tol * max(abs(d1), abs(d2)) + roundoff:
        return None
    return sum(w * v[step] for step, w in STENCILS[4]) / h


def run_gradcheck_suite(n_configs: int = 100, seed: int = 0, h: float = 1e-4,
                        entries_per_param: int = 1, max_tries: int = 8) -> GradcheckReport:
    """Compare analytic and central-difference gradients of the weighted objective.

    Every parameter tensor of every random config is checked at random entries;
    entries whose stencil crosses a kink are redrawn (up to ``max_tries``
    draws per entry) and counted in ``n_skipped``. The fusion scalars do not
    enter the objective and are not checked.
    """
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst, where, count, skipped = 0.0, "", 0, 0
    for c in range(n_configs):
        cfg, params, batch, positives = random_case(rng)

        def loss_fn(p):
            g = Graph()
            terms, _ = objective(g.params(p), batch, cfg, positives)
            return g, terms["total"]

        graph, loss = loss_fn(params)
        grads = graph.backward(loss)
        for name, value in params.items():
            if name in ("w_f", "w_s"):
                continue
            order = rng.permutation(value.size)[:max_tries * entries_per_param]
            done = 0
            for flat in order:
                if done == entries_per_param:
                    break
                idx = np.unravel_index(int(flat), value.shape)
                numeric = smooth_derivative(loss_fn, params, name, idx, h)
                if numeric is None:
                    skipped += 1
                    continue
                done += 1
                err = relative_error(float(grads[name][idx]), numeric)
                if err > worst:
                    worst, where = err, f"config {c} parameter {name}{list(map(int, idx))}"
            count += done
    return GradcheckReport(worst, where, n_configs, count, time.perf_counter() - start, skipped)
