"""Minimal reverse-mode automatic differentiation over 2-D float64 arrays.

Supports exactly the primitive set the networks need: matmul, bias add,
ReLU, sigmoid, elementwise multiply, dropout, batch normalization (handled
in layers.py), sparsemax, MSE, and a mask-entropy regularizer. Graphs are
built eagerly; ``backward`` walks a topological order.
"""

from __future__ import annotations

import numpy as np

from ..errors import GraphShapeError


class Tensor:
    """A node in the computation graph holding a float64 array."""

    __slots__ = ("data", "grad", "parents", "_backward", "requires_grad")

    def __init__(self, data, parents=(), backward=None, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.parents = parents
        self._backward = backward
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad = self.grad + g

    def backward(self):
        if self.data.size != 1:
            raise GraphShapeError(
                f"backward() requires a scalar output, got shape {self.shape}"
            )
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)


def _tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _tensor(a), _tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise GraphShapeError(f"matmul shapes incompatible: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data, parents=(a, b))

    def backward(g):
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    out._backward = backward
    return out


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    x, b = _tensor(x), _tensor(b)
    if b.data.ndim != 1 or x.shape[1] != b.shape[0]:
        raise GraphShapeError(f"bias shape {b.shape} does not match input {x.shape}")
    out = Tensor(x.data + b.data[None, :], parents=(x, b))

    def backward(g):
        x._accumulate(g)
        b._accumulate(g.sum(axis=0))

    out._backward = backward
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _tensor(a), _tensor(b)
    if a.shape != b.shape:
        raise GraphShapeError(f"add shapes differ: {a.shape} vs {b.shape}")
    out = Tensor(a.data + b.data, parents=(a, b))

    def backward(g):
        a._accumulate(g)
        b._accumulate(g)

    out._backward = backward
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _tensor(a), _tensor(b)
    if a.shape != b.shape:
        raise GraphShapeError(f"mul shapes differ: {a.shape} vs {b.shape}")
    out = Tensor(a.data * b.data, parents=(a, b))

    def backward(g):
        a._accumulate(g * b.data)
        b._accumulate(g * a.data)

    out._backward = backward
    return out


def scale(x: Tensor, c: float) -> Tensor:
    x = _tensor(x)
    out = Tensor(x.data * c, parents=(x,))

    def backward(g):
        x._accumulate(g * c)

    out._backward = backward
    return out


def relu(x: Tensor) -> Tensor:
    x = _tensor(x)
    out = Tensor(np.maximum(x.data, 0.0), parents=(x,))

    def backward(g):
        x._accumulate(g * (x.data > 0.0))

    out._backward = backward
    return out


def sigmoid(x: Tensor) -> Tensor:
    x = _tensor(x)
    s = 1.0 / (1.0 + np.exp(-x.data))
    out = Tensor(s, parents=(x,))

    def backward(g):
        x._accumulate(g * s * (1.0 - s))

    out._backward = backward
    return out


def dropout(x: Tensor, p: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout; exact identity in eval mode."""
    x = _tensor(x)
    if not training or p == 0.0:
        return x
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    out = Tensor(x.data * mask, parents=(x,))

    def backward(g):
        x._accumulate(g * mask)

    out._backward = backward
    return out


def sparsemax_projection(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise Euclidean projection onto the simplex (sort algorithm).

    Returns (probabilities, support mask).
    """
    z = np.asarray(z, dtype=np.float64)
    zs = np.sort(z, axis=1)[:, ::-1]
    cs = np.cumsum(zs, axis=1)
    ks = np.arange(1, z.shape[1] + 1)
    feasible = 1.0 + ks * zs > cs
    k_z = feasible.sum(axis=1)
    tau = (cs[np.arange(z.shape[0]), k_z - 1] - 1.0) / k_z
    p = np.maximum(z - tau[:, None], 0.0)
    return p, p > 0.0


def sparsemax(x: Tensor) -> Tensor:
    """Sparsemax activation; backward uses the support-restricted Jacobian."""
    x = _tensor(x)
    p, support = sparsemax_projection(x.data)
    out = Tensor(p, parents=(x,))

    def backward(g):
        counts = support.sum(axis=1)
        mean_on_support = np.where(support, g, 0.0).sum(axis=1) / np.maximum(counts, 1)
        x._accumulate(np.where(support, g - mean_on_support[:, None], 0.0))

    out._backward = backward
    return out


def mse(pred: Tensor, target: np.ndarray) -> Tensor:
    pred = _tensor(pred)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise GraphShapeError(f"mse shapes differ: {pred.shape} vs {target.shape}")
    diff = pred.data - target
    out = Tensor(np.mean(diff**2), parents=(pred,))

    def backward(g):
        pred._accumulate(g * 2.0 * diff / diff.size)

    out._backward = backward
    return out


def mask_entropy(m: Tensor, eps: float = 1e-10) -> Tensor:
    """Mean over rows of the entropy -sum(m * log(m + eps)) of mask rows."""
    m = _tensor(m)
    n = m.shape[0]
    out = Tensor(np.mean(-np.sum(m.data * np.log(m.data + eps), axis=1)), parents=(m,))

    def backward(g):
        m._accumulate(g * (-(np.log(m.data + eps) + m.data / (m.data + eps))) / n)

    out._backward = backward
    return out
