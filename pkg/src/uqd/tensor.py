"""Float64 tensors with reverse-mode automatic differentiation.

A :class:`Tensor` wraps a numpy float64 array. Primitive operations compute
their forward value immediately and, when a :class:`GradientTape` is active
and at least one operand requires gradients, record a backward rule onto the
tape. :func:`backward` replays the tape once in reverse topological order and
returns the gradient of every grad-requiring leaf connected to the loss.

The tape model is deliberately minimal: one active tape at a time, created
per training step, consumed by a single backward call. First-order gradients
only; all arithmetic stays in float64.
"""

from __future__ import annotations

import numpy as np

from .rng import RngStream

__all__ = [
    "Tensor", "GradientTape", "backward", "stop_gradient", "gaussian_noise",
    "add", "sub", "mul", "div", "matmul", "transpose", "reshape",
    "exp", "log", "sqrt", "square", "relu", "softplus", "softmax", "clip_min",
]

_active_tape: "GradientTape | None" = None


class Tensor:
    """Dense float64 array, optionally participating in the active tape."""

    __slots__ = ("data", "requires_grad", "node")

    def __init__(self, data, requires_grad: bool = False) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.node: _TapeNode | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({self.data!r}{flag})"

    # arithmetic operators delegate to the recorded primitives
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def sum(self, axis: int | None = None) -> "Tensor":
        src = self
        out = Tensor(src.data.sum(axis=axis))
        if axis is None:
            fn = lambda g: (np.broadcast_to(g, src.data.shape).copy(),)
        else:
            fn = lambda g: (
                np.broadcast_to(np.expand_dims(g, axis), src.data.shape).copy(),)
        _record(out, (src,), fn)
        return out

    def mean(self, axis: int | None = None) -> "Tensor":
        src = self
        n = src.data.size if axis is None else src.data.shape[axis]
        out = Tensor(src.data.mean(axis=axis))
        if axis is None:
            fn = lambda g: (np.broadcast_to(g / n, src.data.shape).copy(),)
        else:
            fn = lambda g: (
                np.broadcast_to(np.expand_dims(g / n, axis), src.data.shape).copy(),)
        _record(out, (src,), fn)
        return out


class _TapeNode:
    __slots__ = ("out", "inputs", "fn", "tape")

    def __init__(self, out, inputs, fn, tape):
        self.out = out
        self.inputs = inputs
        self.fn = fn
        self.tape = tape


class GradientTape:
    """Single-use recording context for one forward/backward cycle."""

    def __init__(self) -> None:
        self._nodes: list[_TapeNode] = []
        self.consumed = False

    def __enter__(self) -> "GradientTape":
        global _active_tape
        if _active_tape is not None:
            raise RuntimeError("another gradient tape is already active")
        if self.consumed:
            raise RuntimeError("gradient tape was already consumed")
        _active_tape = self
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        global _active_tape
        _active_tape = None

    def backward(self, loss: "Tensor") -> dict["Tensor", "Tensor"]:
        if loss.node is not None and loss.node.tape is not self:
            raise RuntimeError("loss was recorded on a different tape")
        return backward(loss)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(out: Tensor, inputs: tuple[Tensor, ...], fn) -> None:
    tape = _active_tape
    if tape is None or not any(t.requires_grad for t in inputs):
        return
    if tape.consumed:
        raise RuntimeError("gradient tape was already consumed")
    out.requires_grad = True
    node = _TapeNode(out, inputs, fn, tape)
    out.node = node
    tape._nodes.append(node)


def backward(loss: Tensor) -> dict[Tensor, Tensor]:
    """Replay the tape that produced ``loss`` and return leaf gradients.

    The result maps every grad-requiring leaf tensor that is connected to the
    loss to its gradient. Leaves cut off by :func:`stop_gradient` receive no
    entry. The tape is consumed and cannot be replayed.
    """
    if not isinstance(loss, Tensor):
        raise TypeError("loss must be a Tensor")
    if loss.data.size != 1:
        raise ValueError("loss must be a scalar tensor")
    if loss.node is None:
        raise RuntimeError("loss was not recorded under an active gradient tape")
    tape = loss.node.tape
    if tape.consumed:
        raise RuntimeError("gradient tape was already consumed")
    tape.consumed = True

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}
    for node in reversed(tape._nodes):
        g = grads.pop(id(node.out), None)
        if g is None:
            continue
        for t, gi in zip(node.inputs, node.fn(g)):
            if gi is None or not t.requires_grad:
                continue
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi
            # a tensor produced on an older, consumed tape re-enters as a leaf
            if t.node is None or t.node.tape is not tape:
                leaves[key] = t
    return {t: Tensor(grads[key]) for key, t in leaves.items()}


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    # sum the gradient back down to the operand's pre-broadcast shape
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data + b.data)
    _record(out, (a, b), lambda g: (_unbroadcast(g, a.data.shape),
                                    _unbroadcast(g, b.data.shape)))
    return out


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data - b.data)
    _record(out, (a, b), lambda g: (_unbroadcast(g, a.data.shape),
                                    _unbroadcast(-g, b.data.shape)))
    return out


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = Tensor(a.data * b.data)
    _record(out, (a, b), lambda g: (_unbroadcast(g * b.data, a.data.shape),
                                    _unbroadcast(g * a.data, b.data.shape)))
    return out


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if np.any(b.data == 0.0):
        raise ValueError("division by zero")
    out = Tensor(a.data / b.data)
    _record(out, (a, b), lambda g: (
        _unbroadcast(g / b.data, a.data.shape),
        _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)))
    return out


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    if a.data.shape[1] != b.data.shape[0]:
        raise ValueError(
            f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out = Tensor(a.data @ b.data)
    _record(out, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))
    return out


def transpose(a) -> Tensor:
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ValueError("transpose expects a 2-D operand")
    out = Tensor(np.ascontiguousarray(a.data.T))
    _record(out, (a,), lambda g: (np.ascontiguousarray(g.T),))
    return out


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.reshape(shape).copy())
    _record(out, (a,), lambda g: (g.reshape(a.data.shape),))
    return out


def exp(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.exp(a.data))
    val = out.data
    _record(out, (a,), lambda g: (g * val,))
    return out


def log(a) -> Tensor:
    a = _as_tensor(a)
    if np.any(a.data <= 0.0):
        raise ValueError("log of non-positive value")
    out = Tensor(np.log(a.data))
    _record(out, (a,), lambda g: (g / a.data,))
    return out


def sqrt(a) -> Tensor:
    a = _as_tensor(a)
    if np.any(a.data < 0.0):
        raise ValueError("sqrt of negative value")
    out = Tensor(np.sqrt(a.data))
    val = out.data
    _record(out, (a,), lambda g: (g * 0.5 / val,))
    return out


def square(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data * a.data)
    _record(out, (a,), lambda g: (2.0 * a.data * g,))
    return out


def relu(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0))
    _record(out, (a,), lambda g: (g * (a.data > 0.0),))
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(np.logaddexp(0.0, a.data))
    _record(out, (a,), lambda g: (g * _sigmoid(a.data),))
    return out


def softmax(a) -> Tensor:
    """Softmax over the last axis, stabilized by max subtraction."""
    a = _as_tensor(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(p)
    _record(out, (a,), lambda g: (
        (g - (g * p).sum(axis=-1, keepdims=True)) * p,))
    return out


def clip_min(a, lo: float) -> Tensor:
    """Elementwise max(a, lo); gradient passes only where a > lo."""
    a = _as_tensor(a)
    out = Tensor(np.maximum(a.data, lo))
    _record(out, (a,), lambda g: (g * (a.data > lo),))
    return out


def stop_gradient(t) -> Tensor:
    """Identical forward value; contributes exactly zero gradient."""
    t = _as_tensor(t)
    return Tensor(t.data.copy())


def gaussian_noise(shape, rng: RngStream) -> Tensor:
    """Standard-normal draws as a constant tensor (never differentiated)."""
    return Tensor(rng.normal(shape))
