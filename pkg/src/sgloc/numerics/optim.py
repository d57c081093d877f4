from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class OptimizerState:
    """Adam moment accumulators, one pair per trainable parameter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: dict[str, np.ndarray], names=None, **hyper) -> "OptimizerState":
        names = list(params) if names is None else list(names)
        return cls(
            m={k: np.zeros_like(params[k]) for k in names},
            v={k: np.zeros_like(params[k]) for k in names},
            **hyper,
        )


def adam_update(state: OptimizerState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
    """One bias-corrected Adam step.

    Only parameters tracked by ``state`` are updated; the rest are passed
    through untouched. Returns ``(new_params, new_state)`` without mutating
    the inputs.
    """
    for k in state.m:
        if k not in grads:
            raise KeyError(f"missing gradient for trainable parameter {k!r}")
        if grads[k].shape != params[k].shape:
            raise ValueError(f"gradient shape {grads[k].shape} != parameter shape {params[k].shape} for {k!r}")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_params = dict(params)
    new_m, new_v = {}, {}
    for k in state.m:
        g = grads[k]
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * (g * g)
        new_params[k] = params[k] - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        new_m[k], new_v[k] = m, v
    new_state = OptimizerState(new_m, new_v, t, state.lr, b1, b2, state.eps)
    return new_params, new_state
