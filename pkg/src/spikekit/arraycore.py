"""Dense float64 tensors with a record-on-execute reverse-mode tape.

Tensors are immutable values: every operation returns a new tensor and
never touches its inputs' buffers. Running ops inside a ``with Tape()``
block records them; :func:`backward` replays the tape in reverse to
accumulate gradients of a scalar loss. With no active tape the same ops
are plain numpy computations, which is what evaluation paths use.
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, DimensionError

__all__ = [
    "Tensor", "Tape", "Gradients", "Rng", "backward",
    "matmul", "add", "sub", "mul", "scale", "clip", "absolute", "arctan",
    "exp", "maximum", "logistic", "heaviside", "stop_gradient",
    "sum", "mean", "argmax_lastaxis", "stack0",
    "rng_uniform", "rng_normal", "record", "lift",
]


class Tensor:
    """Immutable dense array of 64-bit floats.

    ``data`` is a read-only C-contiguous numpy buffer; the shape never
    changes after construction. Set ``requires_grad=True`` on leaf
    tensors (parameters) whose gradients :func:`backward` should report.
    """

    __slots__ = ("data", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64, order="C")
        if any(d < 0 for d in arr.shape):
            raise DimensionError(f"negative dimension in shape {arr.shape}")
        arr.setflags(write=False)
        self.data = arr
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return self.data.item()

    def tolist(self):
        return self.data.tolist()

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({np.array2string(self.data, threshold=8)}{flag})"

    # Arithmetic sugar; scalars are plain Python numbers.
    def __add__(self, other):
        return add(self, _as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _wrap(arr: np.ndarray, requires_grad: bool) -> Tensor:
    """Wrap an internally produced array without copying."""
    t = Tensor.__new__(Tensor)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim and not arr.flags["C_CONTIGUOUS"]:
        arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    t.data = arr
    t.requires_grad = requires_grad
    return t


def lift(arr: np.ndarray, requires_grad: bool = False) -> Tensor:
    """Adopt a freshly computed array as a tensor, without copying.

    For fused primitives defined outside this module: compute the value,
    ``lift`` it, then :func:`record` it with a backward rule.
    """
    return _wrap(arr, requires_grad)


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


class _Node:
    """One recorded operation: inputs, output, and its backward rule."""

    __slots__ = ("inputs", "out", "rule")

    def __init__(self, inputs, out, rule):
        self.inputs = inputs
        self.out = out
        self.rule = rule


class Tape:
    """Ordered record of operations executed inside a ``with`` block.

    Nodes append in execution order, so inputs always precede their
    consumers (topological order). A tape belongs to one thread and one
    training step; create a fresh one per step.
    """

    _stack: list["Tape"] = []

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        Tape._stack.pop()
        return False

    @staticmethod
    def current() -> Optional["Tape"]:
        return Tape._stack[-1] if Tape._stack else None


def record(out: Tensor, inputs: Sequence[Tensor],
           rule: Callable[[np.ndarray], tuple]) -> Tensor:
    """Record ``out = op(*inputs)`` on the active tape, if any.

    ``rule`` maps the output gradient to one gradient array (or None)
    per input, already reduced to that input's exact shape. Other
    modules use this entry point to register fused primitives.
    """
    tape = Tape.current()
    if tape is not None and out.requires_grad:
        tape.nodes.append(_Node(tuple(inputs), out, rule))
    return out


class Gradients:
    """Gradient store keyed by tensor identity.

    Tensors that never reached the loss through a differentiable path
    map to zeros of their own shape.
    """

    def __init__(self, store: dict, refs: dict):
        self._store = store
        self._refs = refs  # id -> Tensor, keeps identities alive

    def __getitem__(self, t: Tensor) -> Tensor:
        arr = self._store.get(id(t))
        if arr is None:
            return _wrap(np.zeros(t.shape), False)
        return _wrap(arr, False)

    def get(self, t: Tensor) -> Tensor:
        return self[t]

    def __contains__(self, t: Tensor) -> bool:
        return id(t) in self._store


def backward(tape: Tape, loss: Tensor) -> Gradients:
    """Accumulate d(loss)/d(tensor) for everything recorded on ``tape``.

    Pure with respect to the tape: running it twice returns identical
    gradients.
    """
    if loss.shape != ():
        raise ContractError(f"loss must be scalar, got shape {loss.shape}")
    store: dict[int, np.ndarray] = {id(loss): np.ones(())}
    refs: dict[int, Tensor] = {id(loss): loss}
    for node in reversed(tape.nodes):
        gout = store.get(id(node.out))
        if gout is None:
            continue
        for inp, gin in zip(node.inputs, node.rule(gout)):
            if gin is None or not inp.requires_grad:
                continue
            key = id(inp)
            have = store.get(key)
            store[key] = gin if have is None else have + gin
            refs[key] = inp
    return Gradients(store, refs)


# ---------------------------------------------------------------------------
# Elementwise operations. Broadcasting is restricted to scalar-vs-tensor
# plus row-vector bias addition; anything else is a dimension error.
# ---------------------------------------------------------------------------

def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    if shape == ():
        return np.asarray(g.sum())
    # row-vector bias under a [rows, features] gradient
    return g.sum(axis=0)

def _check_pair(a: Tensor, b: Tensor, op: str, allow_bias: bool) -> None:
    if a.shape == b.shape or a.shape == () or b.shape == ():
        return
    if allow_bias and a.ndim == 2 and b.ndim == 1 and a.shape[1] == b.shape[0]:
        return
    raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_pair(a, b, "add", allow_bias=True)
    out = _wrap(a.data + b.data, a.requires_grad or b.requires_grad)
    na, nb, ash, bsh = a.requires_grad, b.requires_grad, a.shape, b.shape

    def rule(g):
        return (_unbroadcast(g, ash) if na else None,
                _unbroadcast(g, bsh) if nb else None)

    return record(out, (a, b), rule)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_pair(a, b, "sub", allow_bias=True)
    out = _wrap(a.data - b.data, a.requires_grad or b.requires_grad)
    na, nb, ash, bsh = a.requires_grad, b.requires_grad, a.shape, b.shape

    def rule(g):
        return (_unbroadcast(g, ash) if na else None,
                _unbroadcast(-g, bsh) if nb else None)

    return record(out, (a, b), rule)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_pair(a, b, "mul", allow_bias=False)
    out = _wrap(a.data * b.data, a.requires_grad or b.requires_grad)
    na, nb = a.requires_grad, b.requires_grad
    ad, bd, ash, bsh = a.data, b.data, a.shape, b.shape

    def rule(g):
        return (_unbroadcast(g * bd, ash) if na else None,
                _unbroadcast(g * ad, bsh) if nb else None)

    return record(out, (a, b), rule)


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)
    out = _wrap(x.data * c, x.requires_grad)
    return record(out, (x,), lambda g: (g * c,))


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp to [lo, hi]; gradient is 1 inside the closed interval, 0 outside."""
    if not lo <= hi:
        raise DimensionError(f"clip: lo={lo} must not exceed hi={hi}")
    out = _wrap(np.clip(x.data, lo, hi), x.requires_grad)
    xd = x.data

    def rule(g):
        return (g * ((xd >= lo) & (xd <= hi)),)

    return record(out, (x,), rule)


def absolute(x: Tensor) -> Tensor:
    """|x|; the subgradient at 0 is defined as 0."""
    out = _wrap(np.abs(x.data), x.requires_grad)
    sgn = np.sign(x.data)
    return record(out, (x,), lambda g: (g * sgn,))


def arctan(x: Tensor) -> Tensor:
    out = _wrap(np.arctan(x.data), x.requires_grad)
    xd = x.data
    return record(out, (x,), lambda g: (g / (1.0 + xd * xd),))


def exp(x: Tensor) -> Tensor:
    out = _wrap(np.exp(x.data), x.requires_grad)
    od = out.data
    return record(out, (x,), lambda g: (g * od,))


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise max; ties route the whole gradient to the first operand."""
    a, b = _as_tensor(a), _as_tensor(b)
    _check_pair(a, b, "maximum", allow_bias=False)
    out = _wrap(np.maximum(a.data, b.data), a.requires_grad or b.requires_grad)
    na, nb, ash, bsh = a.requires_grad, b.requires_grad, a.shape, b.shape
    take_a = a.data >= b.data

    def rule(g):
        return (_unbroadcast(g * take_a, ash) if na else None,
                _unbroadcast(g * ~take_a, bsh) if nb else None)

    return record(out, (a, b), rule)


def logistic(x: Tensor) -> Tensor:
    """1 / (1 + e^(-x)), overflow-safe on both tails."""
    xd = x.data
    with np.errstate(over="ignore"):
        val = np.where(xd >= 0, 1.0 / (1.0 + np.exp(-xd)),
                       np.exp(xd) / (1.0 + np.exp(xd)))
    out = _wrap(val, x.requires_grad)
    od = out.data
    return record(out, (x,), lambda g: (g * od * (1.0 - od),))


def heaviside(x: Tensor, include_zero: bool = False) -> Tensor:
    """Binary step: 1 where x > 0 (or x >= 0 when include_zero). Not differentiable."""
    spikes = (x.data >= 0.0) if include_zero else (x.data > 0.0)
    return _wrap(spikes.astype(np.float64), False)


def stop_gradient(x: Tensor) -> Tensor:
    """Same forward value as x; contributes exactly zero gradient upstream."""
    return _wrap(x.data, False)


# ---------------------------------------------------------------------------
# Matrix product and reductions
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not chain")
    out = _wrap(a.data @ b.data, a.requires_grad or b.requires_grad)
    na, nb, ad, bd = a.requires_grad, b.requires_grad, a.data, b.data

    def rule(g):
        return (g @ bd.T if na else None, ad.T @ g if nb else None)

    return record(out, (a, b), rule)


def _check_axis(x: Tensor, axis: int) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"axis {axis} invalid for shape {x.shape}")
    return axis % x.ndim


def sum(x: Tensor, axis: Optional[int] = None) -> Tensor:
    if axis is None:
        out = _wrap(np.asarray(x.data.sum()), x.requires_grad)
        shape = x.shape
        return record(out, (x,), lambda g: (np.broadcast_to(g, shape),))
    axis = _check_axis(x, axis)
    out = _wrap(x.data.sum(axis=axis), x.requires_grad)
    shape = x.shape

    def rule(g):
        return (np.broadcast_to(np.expand_dims(g, axis), shape),)

    return record(out, (x,), rule)


def mean(x: Tensor, axis: Optional[int] = None) -> Tensor:
    if axis is None:
        n = x.size
        out = _wrap(np.asarray(x.data.mean()), x.requires_grad)
        shape = x.shape
        return record(out, (x,), lambda g: (np.broadcast_to(g / n, shape),))
    axis = _check_axis(x, axis)
    n = x.shape[axis]
    out = _wrap(x.data.mean(axis=axis), x.requires_grad)
    shape = x.shape

    def rule(g):
        return (np.broadcast_to(np.expand_dims(g / n, axis), shape),)

    return record(out, (x,), rule)


def argmax_lastaxis(x: Tensor) -> np.ndarray:
    """Index of the maximum along the last axis; ties break toward the lower index."""
    if x.ndim == 0:
        raise DimensionError("argmax_lastaxis needs at least one axis")
    return np.argmax(x.data, axis=-1)


def stack0(parts: Sequence[Tensor]) -> Tensor:
    """Stack equal-shape tensors along a new leading axis."""
    parts = list(parts)
    if not parts:
        raise DimensionError("stack0 needs at least one tensor")
    shape = parts[0].shape
    for p in parts:
        if p.shape != shape:
            raise DimensionError(f"stack0: mixed shapes {shape} and {p.shape}")
    out = _wrap(np.stack([p.data for p in parts]),
                any(p.requires_grad for p in parts))

    def rule(g):
        return tuple(g[t] for t in range(len(parts)))

    return record(out, tuple(parts), rule)


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

class Rng:
    """Deterministic random stream: identical seeds replay identical samples."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, shape) -> Tensor:
        return rng_uniform(self, shape)

    def normal(self, shape, std: float = 1.0) -> Tensor:
        return rng_normal(self, shape, std)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)


def _check_shape(shape) -> tuple:
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    if any(int(d) < 1 for d in shape):
        raise DimensionError(f"shape {shape} must have positive dimensions")
    return shape


def rng_uniform(rng: Rng, shape) -> Tensor:
    """Samples uniform in [0, 1)."""
    return _wrap(rng._gen.random(_check_shape(shape)), False)


def rng_normal(rng: Rng, shape, std: float = 1.0) -> Tensor:
    """Samples zero-mean normal with the given standard deviation."""
    return _wrap(rng._gen.normal(0.0, std, _check_shape(shape)), False)
