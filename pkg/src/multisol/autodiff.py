"""A small reverse-mode differentiation tape over dense numpy arrays.

Each :class:`Tensor` records the tensors it was computed from together with a
vector-Jacobian product for every parent. :meth:`Tensor.backward` walks the
graph in reverse topological order and accumulates gradients.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


class Tensor:
    __slots__ = ("value", "grad", "requires_grad", "_parents", "_name")
    # make numpy defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        tag = f" {self._name}" if self._name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    @staticmethod
    def from_op(value, parents: Sequence[tuple["Tensor", Callable]]) -> "Tensor":
        """Build a tape node. ``parents`` pairs each input with its VJP ``g -> dL/dinput``."""
        live = tuple((p, f) for p, f in parents if p.requires_grad)
        out = Tensor(value, requires_grad=bool(live))
        out._parents = live
        return out

    def backward(self, grad=None):
        if not self.requires_grad:
            raise RuntimeError("backward() on a tensor that is not recorded on the tape")
        if grad is None:
            if self.value.size != 1:
                raise RuntimeError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.value)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p, _ in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for p, vjp in node._parents:
                pg = _unbroadcast(vjp(g), p.shape)
                grads[id(p)] = pg if id(p) not in grads else grads[id(p)] + pg

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        return Tensor.from_op(self.value + other.value, [(self, lambda g: g), (other, lambda g: g)])

    __radd__ = __add__

    def __neg__(self):
        return Tensor.from_op(-self.value, [(self, lambda g: -g)])

    def __sub__(self, other):
        other = as_tensor(other)
        return Tensor.from_op(self.value - other.value, [(self, lambda g: g), (other, lambda g: -g)])

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __mul__(self, other):
        other = as_tensor(other)
        a, b = self.value, other.value
        return Tensor.from_op(a * b, [(self, lambda g: g * b), (other, lambda g: g * a)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        a, b = self.value, other.value
        out = a / b
        return Tensor.from_op(out, [(self, lambda g: g / b), (other, lambda g: -g * out / b)])

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self.value, other.value
        return Tensor.from_op(a @ b, [(self, lambda g: g @ b.T), (other, lambda g: a.T @ g)])

    def square(self):
        a = self.value
        return Tensor.from_op(a * a, [(self, lambda g: 2.0 * g * a)])

    # reductions -----------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        shape = self.shape

        def vjp(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return np.broadcast_to(g, shape)

        return Tensor.from_op(self.value.sum(axis=axis, keepdims=keepdims), [(self, vjp)])

    def mean(self, axis=None, keepdims=False):
        n = self.value.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    # elementwise ----------------------------------------------------------

    def relu(self):
        mask = self.value > 0
        return Tensor.from_op(self.value * mask, [(self, lambda g: g * mask)])

    def exp(self):
        out = np.exp(self.value)
        return Tensor.from_op(out, [(self, lambda g: g * out)])

    def log(self):
        a = self.value
        return Tensor.from_op(np.log(a), [(self, lambda g: g / a)])

    def clip_min(self, lo: float):
        keep = self.value >= lo
        return Tensor.from_op(np.maximum(self.value, lo), [(self, lambda g: g * keep)])

    def sigmoid(self):
        out = sigmoid(self.value)
        return Tensor.from_op(out, [(self, lambda g: g * out * (1.0 - out))])

    def softmax(self, axis=-1):
        out = softmax(self.value, axis=axis)

        def vjp(g):
            return out * (g - (g * out).sum(axis=axis, keepdims=True))

        return Tensor.from_op(out, [(self, vjp)])


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def softmax(x, axis=-1):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def numerical_grad(f: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central finite differences of a scalar function, one coordinate at a time."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = f(x)
        flat[i] = orig - step
        lo = f(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * step)
    return g
