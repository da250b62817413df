"""Dense tensors with tape-based reverse-mode differentiation.

Every primitive op returns a new :class:`Tensor`.  When at least one operand
has ``requires_grad`` and a :class:`Tape` is active, the op appends a node to
that tape; :func:`backward` replays the nodes in reverse order.

Broadcasting is deliberately restricted to scalar-with-tensor.  Anything else
goes through :func:`broadcast_to` / :func:`reshape` explicitly.
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import expit

DEFAULT_DTYPE = np.float64

ACTIVATIONS = ("tanh", "sigmoid", "relu", "hard_tanh")


class NumericError(FloatingPointError):
    """A non-finite value appeared where a finite one was required."""


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: str | None = None):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and data.dtype == np.float32 else DEFAULT_DTYPE
        arr = np.array(data, dtype=dtype, copy=True, order="C")
        arr.setflags(write=False)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        # internal constructor: takes ownership, no copy
        t = cls.__new__(cls)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        t.data = arr
        t.requires_grad = False
        t.name = None
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)


def tensor(data, requires_grad: bool = False, dtype=None) -> Tensor:
    return Tensor(data, requires_grad=requires_grad, dtype=dtype)


def zeros(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=requires_grad)


def ones(shape, requires_grad: bool = False) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=requires_grad)


# --------------------------------------------------------------------------
# recording

@dataclass
class _Node:
    out: Tensor
    inputs: tuple[Tensor, ...]
    vjp: Callable[[np.ndarray], tuple[np.ndarray | None, ...]]


@dataclass
class Tape:
    """Ordered record of the differentiable ops of one forward pass."""

    nodes: list[_Node] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)


_TAPE: contextvars.ContextVar[Tape | None] = contextvars.ContextVar("ltcse_tape", default=None)
_CHECKED: contextvars.ContextVar[bool] = contextvars.ContextVar("ltcse_checked", default=False)


@contextlib.contextmanager
def record():
    """Activate a fresh tape for the duration of the block."""
    tape = Tape()
    token = _TAPE.set(tape)
    try:
        yield tape
    finally:
        _TAPE.reset(token)


@contextlib.contextmanager
def no_record():
    token = _TAPE.set(None)
    try:
        yield
    finally:
        _TAPE.reset(token)


@contextlib.contextmanager
def checked(enabled: bool = True):
    """Scan every op output for NaN/Inf while active."""
    token = _CHECKED.set(enabled)
    try:
        yield
    finally:
        _CHECKED.reset(token)


def set_checked(enabled: bool) -> None:
    _CHECKED.set(enabled)


def is_checked() -> bool:
    return _CHECKED.get()


def _as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor._wrap(np.asarray(x, dtype=DEFAULT_DTYPE))


def _emit(op: str, out: np.ndarray, inputs: tuple[Tensor, ...], vjp) -> Tensor:
    if _CHECKED.get() and not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite value produced by {op}")
    res = Tensor._wrap(out)
    if any(t.requires_grad for t in inputs):
        tape = _TAPE.get()
        if tape is not None:
            res.requires_grad = True
            tape.nodes.append(_Node(res, inputs, vjp))
    return res


def _unscalar(g: np.ndarray, t: Tensor) -> np.ndarray:
    # gradient of a scalar operand that was broadcast against a tensor
    if t.data.shape == g.shape:
        return g
    return np.asarray(g.sum()).reshape(t.data.shape)


def _check_pair(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ (only scalar broadcasting is allowed)")


# --------------------------------------------------------------------------
# arithmetic

def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_pair("add", a, b)
    return _emit("add", a.data + b.data, (a, b), lambda g: (_unscalar(g, a), _unscalar(g, b)))


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_pair("sub", a, b)
    return _emit("sub", a.data - b.data, (a, b), lambda g: (_unscalar(g, a), _unscalar(-g, b)))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_pair("mul", a, b)
    return _emit("mul", a.data * b.data, (a, b),
                 lambda g: (_unscalar(g * b.data, a), _unscalar(g * a.data, b)))


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_pair("div", a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data

    def vjp(g):
        ga = g / b.data
        gb = -g * a.data / (b.data * b.data)
        return _unscalar(ga, a), _unscalar(gb, b)

    return _emit("div", out, (a, b), vjp)


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return _emit("neg", -a.data, (a,), lambda g: (-g,))


def exp(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    return _emit("exp", out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return _emit("log", out, (a,), lambda g: (g / a.data,))


def square(a) -> Tensor:
    a = _as_tensor(a)
    return _emit("square", a.data * a.data, (a,), lambda g: (2.0 * g * a.data,))


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out = np.tanh(a.data)
    return _emit("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    out = expit(a.data)
    return _emit("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0  # subgradient 0 at the kink
    return _emit("relu", np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def hard_tanh(a) -> Tensor:
    a = _as_tensor(a)
    mask = (a.data > -1.0) & (a.data < 1.0)  # subgradient 0 at +-1
    return _emit("hard_tanh", np.clip(a.data, -1.0, 1.0), (a,), lambda g: (g * mask,))


_ACTIVATION_FNS = {"tanh": tanh, "sigmoid": sigmoid, "relu": relu, "hard_tanh": hard_tanh}


def activation(kind: str) -> Callable[[Tensor], Tensor]:
    try:
        return _ACTIVATION_FNS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}") from None


def elementwise(kind: str, *operands) -> Tensor:
    """Dispatch an elementwise op by name (activations and arithmetic)."""
    table = {
        **_ACTIVATION_FNS,
        "add": add, "sub": sub, "mul": mul, "div": div, "exp": exp, "neg": neg,
        "log": log, "square": square,
    }
    if kind not in table:
        raise ValueError(f"unknown elementwise kind {kind!r}")
    return table[kind](*operands)


def clamp(a, lo: float, hi: float) -> Tensor:
    a = _as_tensor(a)
    mask = (a.data > lo) & (a.data < hi)
    return _emit("clamp", np.clip(a.data, lo, hi), (a,), lambda g: (g * mask,))


# --------------------------------------------------------------------------
# linear algebra and reductions

def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul inner dimensions disagree: {a.shape[0]}x{a.shape[1]} @ {b.shape[0]}x{b.shape[1]}")
    return _emit("matmul", a.data @ b.data, (a, b),
                 lambda g: (g @ b.data.T, a.data.T @ g))


def _norm_axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise ShapeError(f"axis {axis} out of range for rank {ndim}")
    return axis % ndim


def reduce_sum(t, axis: int | None = None) -> Tensor:
    t = _as_tensor(t)
    if axis is None:
        shape = t.shape
        return _emit("sum", np.asarray(t.data.sum()), (t,),
                     lambda g: (np.broadcast_to(g, shape).copy(),))
    ax = _norm_axis(axis, t.ndim)
    shape = t.shape

    def vjp(g):
        return (np.broadcast_to(np.expand_dims(g, ax), shape).copy(),)

    return _emit("sum", t.data.sum(axis=ax), (t,), vjp)


def mean(t, axis: int | None = None) -> Tensor:
    t = _as_tensor(t)
    n = t.size if axis is None else t.shape[_norm_axis(axis, t.ndim)]
    return mul(reduce_sum(t, axis), 1.0 / n)


# --------------------------------------------------------------------------
# shape manipulation

def reshape(t, shape: Sequence[int]) -> Tensor:
    t = _as_tensor(t)
    old = t.shape
    try:
        out = t.data.reshape(tuple(shape))
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {old} to {tuple(shape)}") from exc
    return _emit("reshape", out, (t,), lambda g: (g.reshape(old),))


def transpose(t) -> Tensor:
    t = _as_tensor(t)
    if t.ndim != 2:
        raise ShapeError("transpose expects a rank-2 tensor")
    return _emit("transpose", t.data.T, (t,), lambda g: (g.T,))


def broadcast_to(t, shape: Sequence[int]) -> Tensor:
    """Explicit broadcast of size-1 axes; ranks must already match."""
    t = _as_tensor(t)
    shape = tuple(shape)
    if t.ndim != len(shape) or any(s != d and s != 1 for s, d in zip(t.shape, shape)):
        raise ShapeError(f"cannot broadcast {t.shape} to {shape}; reshape to equal rank first")
    axes = tuple(i for i, (s, d) in enumerate(zip(t.shape, shape)) if s == 1 and d != 1)
    src = t.shape

    def vjp(g):
        return (g.sum(axis=axes, keepdims=True).reshape(src) if axes else g,)

    return _emit("broadcast", np.broadcast_to(t.data, shape), (t,), vjp)


def rows(t, n: int) -> Tensor:
    """Tile a vector of length D into an n x D matrix."""
    t = _as_tensor(t)
    return broadcast_to(reshape(t, (1, t.size)), (n, t.size))


def concat(parts: Sequence, axis: int = -1) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    ax = _norm_axis(axis, parts[0].ndim)
    out = np.concatenate([p.data for p in parts], axis=ax)
    bounds = np.cumsum([0] + [p.shape[ax] for p in parts])

    def vjp(g):
        return tuple(np.take(g, range(bounds[i], bounds[i + 1]), axis=ax) for i in range(len(parts)))

    return _emit("concat", out, tuple(parts), vjp)


def stack(parts: Sequence, axis: int = 0) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    out = np.stack([p.data for p in parts], axis=axis)

    def vjp(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(parts)))

    return _emit("stack", out, tuple(parts), vjp)


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(i, (int, slice)) or i is Ellipsis or i is None for i in items)


def getitem(t, index) -> Tensor:
    t = _as_tensor(t)
    out = t.data[index]
    shape = t.shape

    basic = _is_basic_index(index)

    def vjp(g):
        full = np.zeros(shape, dtype=g.dtype)
        if basic:
            full[index] += g
        else:
            np.add.at(full, index, g)
        return (full,)

    return _emit("getitem", np.array(out), (t,), vjp)


# --------------------------------------------------------------------------
# normalisers

def softmax(t, axis: int = -1) -> Tensor:
    t = _as_tensor(t)
    ax = _norm_axis(axis, t.ndim)
    z = t.data - t.data.max(axis=ax, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=ax, keepdims=True)

    def vjp(g):
        return (out * (g - (g * out).sum(axis=ax, keepdims=True)),)

    return _emit("softmax", out, (t,), vjp)


def log_softmax(t, axis: int = -1) -> Tensor:
    t = _as_tensor(t)
    ax = _norm_axis(axis, t.ndim)
    z = t.data - t.data.max(axis=ax, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=ax, keepdims=True))
    out = z - lse
    p = np.exp(out)

    def vjp(g):
        return (g - p * g.sum(axis=ax, keepdims=True),)

    return _emit("log_softmax", out, (t,), vjp)


# --------------------------------------------------------------------------
# reverse pass

def backward(tape: Tape, loss: Tensor, wrt: Iterable[Tensor] | None = None) -> dict[Tensor, Tensor]:
    """Reverse-accumulate dloss/dt for every requires_grad tensor.

    Tensors in ``wrt`` that the loss does not depend on get a zero gradient.
    """
    if loss.size != 1:
        raise ShapeError(f"loss must be a scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones(loss.shape, dtype=loss.dtype)}
    leaves: dict[int, Tensor] = {}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.out), None)
        if g is None:
            continue
        for inp, gi in zip(node.inputs, node.vjp(g)):
            if gi is None or not inp.requires_grad:
                continue
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi
                leaves[key] = inp
    out: dict[Tensor, Tensor] = {}
    for key, t in leaves.items():
        if key in grads:
            out[t] = Tensor._wrap(np.asarray(grads[key], dtype=t.dtype).reshape(t.shape))
    if loss.requires_grad and id(loss) in grads:
        out[loss] = Tensor._wrap(grads[id(loss)])
    if wrt is not None:
        for t in wrt:
            if t not in out:
                out[t] = Tensor._wrap(np.zeros(t.shape, dtype=t.dtype))
    return out


def value_and_grad(f: Callable[..., Tensor], *args: Tensor) -> tuple[float, list[np.ndarray]]:
    """Evaluate ``f(*args)`` on a fresh tape and return (value, gradients)."""
    leaves = [Tensor(a.data, requires_grad=True) for a in args]
    with record() as tape:
        loss = f(*leaves)
    grads = backward(tape, loss, wrt=leaves)
    return loss.item(), [grads[t].data for t in leaves]


def grad_check(f: Callable[..., Tensor], at: Tensor | Sequence[Tensor], step: float = 1e-5) -> float:
    """Max over coordinates of |analytic - central difference| / max(1, |analytic|)."""
    if step <= 0:
        raise ValueError("step must be positive")
    args = [at] if isinstance(at, Tensor) else list(at)
    _, analytic = value_and_grad(f, *args)
    worst = 0.0
    with no_record():
        for i, a in enumerate(args):
            base = a.data.astype(np.float64)
            flat = base.reshape(-1)
            for j in range(flat.size):
                probe = flat.copy()
                probe[j] = flat[j] + step
                plus = _call_with(f, args, i, probe.reshape(base.shape))
                probe[j] = flat[j] - step
                minus = _call_with(f, args, i, probe.reshape(base.shape))
                numeric = (plus - minus) / (2.0 * step)
                an = analytic[i].reshape(-1)[j]
                if not (np.isfinite(numeric) and np.isfinite(an)):
                    raise NumericError(f"non-finite value at argument {i}, coordinate {j}")
                worst = max(worst, abs(an - numeric) / max(1.0, abs(an)))
    return worst


def _call_with(f, args, i, data) -> float:
    probe_args = list(args)
    probe_args[i] = Tensor._wrap(data)
    return f(*probe_args).item()
