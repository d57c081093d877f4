from __future__ import annotations

from typing import Callable, Iterable, Optional

import numpy as np

from .errors import EvaluationError
from .graph import Graph, Node

LossFn = Callable[[dict], "tuple[Graph, Node]"]

# below this magnitude gradients are compared absolutely: a central difference
# cannot resolve them from float roundoff
REL_FLOOR = 1e-7
# (offset in units of h, weight) for central differences of order 2 and 4
STENCILS = {
    2: ((1.0, 0.5), (-1.0, -0.5)),
    4: ((2.0, -1.0 / 12.0), (1.0, 8.0 / 12.0), (-1.0, -8.0 / 12.0), (-2.0, 1.0 / 12.0)),
}


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)


def finite_diff_check(
    loss_fn: LossFn,
    params: dict[str, np.ndarray],
    name: str,
    h: float = 1e-5,
    indices: Optional[Iterable[tuple]] = None,
    analytic: Optional[np.ndarray] = None,
    order: int = 2,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn(params)`` must rebuild the graph from scratch and return
    ``(graph, loss_node)``; it is called once per stencil point per entry. ``indices``
    restricts the check to a subset of entries of ``params[name]``. ``order``
    selects the 2-point (error O(h^2)) or 4-point (error O(h^4)) central stencil;
    the latter tolerates a larger step and so less roundoff.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    if order not in STENCILS:
        raise ValueError(f"order must be one of {sorted(STENCILS)}")
    if analytic is None:
        graph, loss = loss_fn(params)
        analytic = graph.backward(loss)[name]
    if indices is None:
        indices = list(np.ndindex(np.shape(params[name])))
    worst = 0.0
    for idx in indices:
        values = stencil_values(loss_fn, params, name, idx, h, [step for step, _ in STENCILS[order]])
        numeric = sum(weight * values[step] for step, weight in STENCILS[order]) / h
        worst = max(worst, relative_error(float(analytic[idx]), numeric))
    return worst


def stencil_values(loss_fn: LossFn, params, name: str, idx: tuple, h: float, steps) -> dict:
    """Loss at ``params[name][idx] + step * h`` for each step."""
    base = np.asarray(params[name], dtype=np.float64)
    out = {}
    for step in steps:
        bumped = base.copy()
        bumped[idx] += step * h
        trial = dict(params)
        trial[name] = bumped
        value = float(loss_fn(trial)[1].value)
        if not np.isfinite(value):
            raise EvaluationError(f"non-finite loss at {name}{list(idx)} {step:+g}h")
        out[step] = value
    return out
