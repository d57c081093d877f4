"""Tape-based reverse-mode differentiation.

A :class:`Graph` records every operation applied to its nodes in insertion
order, which is also a valid topological order, so the backward sweep is a
single reversed pass over the tape.
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import RankError, ShapeError
from .tensor import Tensor

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Node:
    __slots__ = ("graph", "id", "op", "value", "inputs", "requires_grad", "backward_fn", "name", "trainable")
    # make numpy defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, graph, id, op, value, inputs, requires_grad, backward_fn, name=None, trainable=False):
        self.graph = graph
        self.id = id
        self.op = op
        self.value = value
        self.inputs = inputs
        self.requires_grad = requires_grad
        self.backward_fn = backward_fn
        self.name = name
        self.trainable = trainable

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def item(self) -> float:
        return float(self.value.item())

    def __repr__(self):
        return f"Node(id={self.id}, op={self.op!r}, shape={self.value.shape})"

    # operator sugar; the implementations live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from . import ops
        return ops.div(other, self)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        from . import ops
        return ops.matmul(other, self)

    def __getitem__(self, key):
        from . import ops
        return ops.index(self, key)


class Graph:
    """Differentiable computation record.

    Leaves are registered with :meth:`param` (trainable) or :meth:`const`.
    Operations from :mod:`sgloc.numerics.ops` append nodes as they run.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self.leaves: dict[str, Node] = {}

    def __len__(self):
        return len(self.nodes)

    def _leaf(self, value, name, trainable):
        if isinstance(value, Tensor):
            arr = value.data
        else:
            arr = np.asarray(value, dtype=np.float64)
        if name is not None and name in self.leaves:
            raise KeyError(f"leaf {name!r} already registered")
        node = Node(self, len(self.nodes), "leaf", arr, (), trainable, None, name, trainable)
        self.nodes.append(node)
        if name is not None:
            self.leaves[name] = node
        return node

    def param(self, name: str, value) -> Node:
        return self._leaf(value, name, True)

    def const(self, value, name: str | None = None) -> Node:
        return self._leaf(value, name, False)

    def params(self, values: dict, trainable: bool = True) -> dict[str, Node]:
        return {k: self._leaf(v, k, trainable) for k, v in values.items()}

    def record(self, op: str, value: np.ndarray, inputs: tuple, backward_fn: BackwardFn) -> Node:
        requires_grad = any(isinstance(x, Node) and x.requires_grad for x in inputs)
        node = Node(self, len(self.nodes), op, value, inputs, requires_grad,
                    backward_fn if requires_grad else None)
        self.nodes.append(node)
        return node

    def backward(self, loss: Node) -> dict[str, np.ndarray]:
        """Gradients of a scalar ``loss`` for every trainable leaf.

        Trainable leaves that do not influence the loss receive zeros.
        """
        if loss.graph is not self:
            raise ValueError("loss node belongs to a different graph")
        if loss.value.size != 1:
            raise RankError(f"loss must be a scalar, got shape {loss.value.shape}")
        grads: list[Optional[np.ndarray]] = [None] * (loss.id + 1)
        grads[loss.id] = np.ones_like(loss.value)
        for node in reversed(self.nodes[: loss.id + 1]):
            g = grads[node.id]
            if g is None or node.backward_fn is None:
                continue
            in_grads = node.backward_fn(g)
            for inp, gi in zip(node.inputs, in_grads):
                if gi is None or not isinstance(inp, Node) or not inp.requires_grad:
                    continue
                if gi.shape != inp.value.shape:
                    raise ShapeError(f"{node.op}: gradient shape {gi.shape} != input shape {inp.value.shape}")
                prev = grads[inp.id]
                grads[inp.id] = gi if prev is None else prev + gi
        out = {}
        for name, leaf in self.leaves.items():
            if not leaf.trainable:
                continue
            g = grads[leaf.id] if leaf.id < len(grads) else None
            out[name] = np.zeros_like(leaf.value) if g is None else g
        return out
