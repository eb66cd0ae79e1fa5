"""
Reverse-mode differentiation over dense float64 numpy arrays.

A Tape records every operation applied to the values it watches and replays
the record backwards in Tape.gradient. Tensors never accumulate gradients
themselves, so parameter arrays stay read-only values and repeated gradient
calls are side-effect free. Operations on tensors that are not watched by any
tape simply compute their value.
"""
from __future__ import annotations

from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from core_nn.errors import ShapeError

PROB_FLOOR = 1e-300

BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]
ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence[float]]


class Tensor:
    """Dense row-major array, optionally recorded on a Tape"""

    __slots__ = ('data', 'parents', 'backward_fn', 'tape', 'index')

    def __init__(self,
                 data,
                 parents: Tuple["Tensor", ...] = (),
                 backward_fn: Optional[BackwardFn] = None,
                 tape: Optional["Tape"] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = parents
        self.backward_fn = backward_fn
        self.tape = tape
        self.index = tape._record(self) if tape is not None else -1

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, tensor has shape {self.shape}")
        return float(self.data.reshape(()))

    def __float__(self) -> float:
        return self.item()

    def __repr__(self) -> str:
        recorded = 'recorded' if self.tape is not None else 'constant'
        return f"Tensor(shape={self.shape}, {recorded})"

    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: float) -> "Tensor":
        return mul(self, 1.0 / float(other))

    def __neg__(self) -> "Tensor":
        return neg(self)


class Tape:
    """Records operations in creation order, which is a topological order"""

    def __init__(self):
        self._nodes: List[Tensor] = []

    def __len__(self) -> int:
        return len(self._nodes)

    def _record(self, tensor: Tensor) -> int:
        self._nodes.append(tensor)
        return len(self._nodes) - 1

    def watch(self, value: ArrayLike) -> Tensor:
        """
        Register a leaf whose gradient may be requested later

        Args:
            value: Array to differentiate with respect to (copied)

        Returns:
            Recorded leaf tensor
        """
        data = value.data if isinstance(value, Tensor) else value
        return Tensor(np.array(data, dtype=np.float64, copy=True), tape=self)

    def gradient(self, target: Tensor, sources: Sequence[Tensor]) -> List[np.ndarray]:
        """
        Gradient of a scalar target with respect to each source

        Args:
            target: Scalar tensor recorded on this tape
            sources: Watched tensors

        Returns:
            One array per source, shaped like the source
        """
        if target.tape is not self:
            raise ValueError("target was not recorded on this tape")
        if target.size != 1:
            raise ShapeError(f"gradient target must be scalar, got shape {target.shape}")

        grads: List[Optional[np.ndarray]] = [None] * len(self._nodes)
        grads[target.index] = np.ones_like(target.data)

        for node in reversed(self._nodes[:target.index + 1]):
            upstream = grads[node.index]
            if upstream is None or node.backward_fn is None:
                continue
            for parent, contribution in zip(node.parents, node.backward_fn(upstream)):
                if contribution is None or parent.tape is not self:
                    continue
                current = grads[parent.index]
                grads[parent.index] = contribution if current is None else current + contribution

        result = []
        for source in sources:
            grad = grads[source.index] if source.tape is self else None
            result.append(np.zeros_like(source.data) if grad is None else grad)
        return result


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _node(data: np.ndarray, parents: Tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    tape = next((p.tape for p in parents if p.tape is not None), None)
    if tape is None:
        return Tensor(data)
    return Tensor(data, parents, backward_fn, tape)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.data + b.data, (a, b), backward)


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _node(a.data - b.data, (a, b), backward)


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _node(a.data * b.data, (a, b), backward)


def neg(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return _node(-a.data, (a,), lambda g: (-g,))


def linear(x: ArrayLike, weight: ArrayLike, bias: ArrayLike) -> Tensor:
    """
    Affine map x @ W.T + b for a single row (d,) or a batch (N, d)

    Args:
        x: Input rows
        weight: Matrix of shape (fan_out, fan_in)
        bias: Vector of shape (fan_out,)

    Returns:
        Output rows of width fan_out
    """
    x, weight, bias = as_tensor(x), as_tensor(weight), as_tensor(bias)
    if x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"input width {x.shape[-1]} does not match layer fan_in {weight.shape[1]}")

    def backward(g):
        grad_x = g @ weight.data
        if x.data.ndim == 1:
            grad_w = np.outer(g, x.data)
            grad_b = g
        else:
            grad_w = g.T @ x.data
            grad_b = g.sum(axis=0)
        return grad_x, grad_w, grad_b

    return _node(x.data @ weight.data.T + bias.data, (x, weight, bias), backward)


def relu(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    # derivative at exactly 0 is 0
    active = a.data > 0
    return _node(np.where(active, a.data, 0.0), (a,), lambda g: (g * active,))


def exp(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return _node(out, (a,), lambda g: (g * out,))


def log(a: ArrayLike, floor: float = PROB_FLOOR) -> Tensor:
    a = as_tensor(a)
    safe = np.maximum(a.data, floor)

    def backward(g):
        return (np.where(a.data > floor, g / safe, 0.0),)

    return _node(np.log(safe), (a,), backward)


def maximum(a: ArrayLike, floor: float) -> Tensor:
    """Elementwise max(a, floor) for a constant floor"""
    a = as_tensor(a)
    above = a.data > floor
    return _node(np.where(above, a.data, floor), (a,), lambda g: (g * above,))


def log_softmax(a: ArrayLike) -> Tensor:
    """Numerically stable log-softmax along the last axis"""
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def backward(g):
        return (g - np.exp(out) * g.sum(axis=-1, keepdims=True),)

    return _node(out, (a,), backward)


def _index_array(a: Tensor, index) -> np.ndarray:
    idx = np.broadcast_to(np.asarray(index, dtype=np.int64), a.shape[:-1])
    return idx[..., None]


def take(a: ArrayLike, index) -> Tensor:
    """Select entry `index` along the last axis (one index per row)"""
    a = as_tensor(a)
    idx = _index_array(a, index)

    def backward(g):
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, idx, np.asarray(g)[..., None], axis=-1)
        return (grad,)

    return _node(np.take_along_axis(a.data, idx, axis=-1)[..., 0], (a,), backward)


def masked_max(a: ArrayLike, index) -> Tensor:
    """Max along the last axis excluding entry `index`; ties go to the smallest index"""
    a = as_tensor(a)
    if a.shape[-1] < 2:
        raise ShapeError("masked_max needs at least two entries along the last axis")
    idx = _index_array(a, index)
    excluded = np.arange(a.shape[-1]) == idx
    winner = np.argmax(np.where(excluded, -np.inf, a.data), axis=-1)[..., None]

    def backward(g):
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, winner, np.asarray(g)[..., None], axis=-1)
        return (grad,)

    return _node(np.take_along_axis(a.data, winner, axis=-1)[..., 0], (a,), backward)


def reduce_sum(a: ArrayLike, axis: Optional[int] = None) -> Tensor:
    a = as_tensor(a)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _node(a.data.sum(axis=axis), (a,), backward)


def reduce_mean(a: ArrayLike) -> Tensor:
    a = as_tensor(a)
    return mul(reduce_sum(a), 1.0 / a.size)
