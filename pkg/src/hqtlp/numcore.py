"""Dense float64 tensors with define-by-run reverse-mode differentiation.

A :class:`Tape` records every operation whose operands include a tracked
tensor. Parameters enter the tape through :meth:`Tape.param`; anything else
is a constant. :func:`backward` walks the tape once in reverse and returns
gradients keyed by parameter name, leaving the tape untouched, so repeated
calls give identical maps.

Only the shapes the models need are supported: binary elementwise ops
require equal shapes, there is no broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import _kernels


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class DomainError(ValueError):
    """Input lies outside an operation's domain."""


class ContractError(ValueError):
    """A precondition on arguments was violated."""


class Tensor:
    """A float64 array, optionally attached to a tape node."""

    __slots__ = ("data", "tape", "node")

    def __init__(self, data, tape: "Tape | None" = None, node: int = -1):
        if type(data) is not np.ndarray or data.dtype != np.float64:
            data = np.asarray(data, dtype=np.float64)
        self.data = data
        self.tape = tape
        self.node = node

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def tracked(self) -> bool:
        return self.tape is not None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        tag = f", node={self.node}" if self.tracked else ""
        return f"Tensor(shape={self.shape}{tag})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Append-only operation record.

    Each node is ``(parents, vjp)`` where ``parents`` holds node indices
    (``-1`` for constants) and ``vjp`` maps the output cotangent to one
    cotangent per parent.
    """

    def __init__(self):
        self.nodes: list[tuple[tuple[int, ...], Callable | None]] = []
        self.params: dict[str, int] = {}
        self.shapes: dict[str, tuple[int, ...]] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def param(self, name: str, value) -> Tensor:
        if name in self.params:
            raise ContractError(f"parameter {name!r} already on tape")
        self.nodes.append(((), None))
        idx = len(self.nodes) - 1
        self.params[name] = idx
        t = Tensor(value, self, idx)
        self.shapes[name] = t.shape
        return t

    def watch(self, params: Mapping[str, np.ndarray]) -> dict[str, Tensor]:
        return {k: self.param(k, v) for k, v in params.items()}

    def record(self, value, operands, vjp) -> Tensor:
        parents = tuple(t.node if t.tracked else -1 for t in operands)
        self.nodes.append((parents, vjp))
        return Tensor(value, self, len(self.nodes) - 1)


def constants(params: Mapping[str, np.ndarray]) -> dict[str, Tensor]:
    """Wrap arrays as untracked tensors (inference mode)."""
    return {k: Tensor(v) for k, v in params.items()}


def _tape_of(operands) -> Tape | None:
    tape = None
    for t in operands:
        if t.tape is not None:
            if tape is not None and t.tape is not tape:
                raise ContractError("operands recorded on different tapes")
            tape = t.tape
    return tape


def _emit(value, operands, vjp) -> Tensor:
    tape = _tape_of(operands)
    if tape is None:
        return Tensor(value)
    return tape.record(value, operands, vjp)


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim != 2 or bd.ndim != 2 or ad.shape[1] != bd.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {ad.shape} by {bd.shape}")
    need_a, need_b = a.tape is not None, b.tape is not None

    def vjp(g):
        return (g @ bd.T if need_a else None, ad.T @ g if need_b else None)

    return _emit(ad @ bd, (a, b), vjp)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("add", a, b)
    return _emit(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("sub", a, b)
    return _emit(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _same_shape("mul", a, b)
    ad, bd = a.data, b.data
    return _emit(ad * bd, (a, b), lambda g: (g * bd, g * ad))


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _emit(a.data * c, (a,), lambda g: (g * c,))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    # tanh form never overflows
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _emit(y, (a,), lambda g: (g * y * (1.0 - y),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return _emit(y, (a,), lambda g: (g * (1.0 - y * y),))


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0.0
    return _emit(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def log(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0.0):
        raise DomainError("log: input has nonpositive entries")
    x = a.data
    return _emit(np.log(x), (a,), lambda g: (g / x,))


def softplus(a) -> Tensor:
    """log(1 + exp(a)), computed without overflow."""
    a = as_tensor(a)
    x = a.data
    y = np.logaddexp(0.0, x)
    s = 0.5 * (1.0 + np.tanh(0.5 * x))
    return _emit(y, (a,), lambda g: (g * s,))


def one_minus(a) -> Tensor:
    a = as_tensor(a)
    return _emit(1.0 - a.data, (a,), lambda g: (-g,))


def sum(a) -> Tensor:  # noqa: A001 - mirrors numpy naming
    a = as_tensor(a)
    shape = a.shape
    return _emit(np.array(a.data.sum()), (a,), lambda g: (np.full(shape, float(g)),))


def mean(a) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    size = a.data.size
    return _emit(np.array(a.data.mean()), (a,), lambda g: (np.full(shape, float(g) / size),))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return _emit(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def take(a, idx: np.ndarray) -> Tensor:
    """Gather flat indices of ``a`` into a ``1 x len(idx)`` row."""
    a = as_tensor(a)
    shape = a.shape
    size = a.data.size

    def vjp(g):
        out = np.zeros(size)
        np.add.at(out, idx, g.reshape(-1))
        return (out.reshape(shape),)

    return _emit(a.data.reshape(-1)[idx].reshape(1, -1), (a,), vjp)


def to_symmetric(v, n: int) -> Tensor:
    """Place a ``1 x n(n-1)/2`` row on the upper triangle and mirror it."""
    v = as_tensor(v)
    iu = np.triu_indices(n, k=1)
    flat = v.data.reshape(-1)
    if flat.size != iu[0].size:
        raise ShapeError(f"to_symmetric: {v.shape} does not fill a {n}x{n} triangle")
    out = np.zeros((n, n))
    out[iu] = flat
    out[iu[1], iu[0]] = flat
    shape = v.shape
    return _emit(out, (v,), lambda g: ((g[iu] + g[iu[1], iu[0]]).reshape(shape),))


def stack_rows(rows) -> Tensor:
    """Concatenate ``1 x k`` rows into an ``m x k`` matrix."""
    rows = [as_tensor(r) for r in rows]
    k = rows[0].shape[1]
    for r in rows:
        if r.shape != (1, k):
            raise ShapeError(f"stack_rows: row shape {r.shape}, expected (1, {k})")
    m = len(rows)
    return _emit(np.concatenate([r.data for r in rows], axis=0), tuple(rows),
                 lambda g: tuple(g[i:i + 1] for i in range(m)))


def row(a, i: int) -> Tensor:
    """Row ``i`` of a matrix as a ``1 x k`` tensor."""
    a = as_tensor(a)
    shape = a.shape

    def vjp(g):
        out = np.zeros(shape)
        out[i] = g[0]
        return (out,)

    return _emit(a.data[i:i + 1], (a,), vjp)


ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "log": log,
    "scale": scale,
}


def elementwise(op: str, *args) -> Tensor:
    try:
        fn = ELEMENTWISE[op]
    except KeyError:
        raise ContractError(f"unknown elementwise op {op!r}") from None
    return fn(*args)


# --------------------------------------------------------------------------
# Reverse pass
# --------------------------------------------------------------------------

def backward(tape: Tape, loss: Tensor) -> dict[str, np.ndarray]:
    """Gradients of a scalar ``loss`` for every parameter on ``tape``.

    Parameters the loss does not depend on get zero arrays.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss.tape is not tape:
        raise ContractError("loss was not recorded on this tape")
    grads: list[np.ndarray | None] = [None] * len(tape.nodes)
    # vjps may return views of their input; only arrays we allocated are summed in place
    owned = [False] * len(tape.nodes)
    grads[loss.node] = np.ones_like(loss.data)
    for i in range(loss.node, -1, -1):
        g = grads[i]
        if g is None:
            continue
        parents, vjp = tape.nodes[i]
        if vjp is None:
            continue
        for p, gp in zip(parents, vjp(g)):
            if p < 0 or gp is None:
                continue
            if grads[p] is None:
                grads[p] = gp
            elif owned[p]:
                grads[p] += gp
            else:
                grads[p] = grads[p] + gp
                owned[p] = True
    out = {}
    for name, idx in tape.params.items():
        g = grads[idx]
        out[name] = np.zeros(tape.shapes[name]) if g is None else np.asarray(g, dtype=np.float64)
    return out


def grad_check(f: Callable[[dict[str, Tensor]], Tensor], params: Mapping[str, np.ndarray],
               h: float = 1e-5) -> float:
    """Largest relative gap between tape gradients and central differences.

    ``f`` receives a dict of tensors (tracked on the analytic pass, constant
    on the numeric passes) and returns a scalar tensor. The gap per entry is
    ``|analytic - numeric| / max(1, |numeric|)``.
    """
    tape = Tape()
    loss = f(tape.watch(params))
    analytic = backward(tape, loss)
    worst = 0.0
    for name, value in params.items():
        base = np.array(value, dtype=np.float64)
        flat = base.reshape(-1)
        ga = analytic[name].reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up = f(constants({**params, name: base})).item()
            flat[k] = orig - h
            down = f(constants({**params, name: base})).item()
            flat[k] = orig
            numeric = (up - down) / (2.0 * h)
            err = abs(ga[k] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, err)
    return worst


@dataclass
class AdamState:
    """First/second moment estimates and step count for one parameter set."""

    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: Mapping[str, np.ndarray], state: AdamState,
              lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update. Arrays in ``params`` are updated in place.

    Per entry: ``p -= lr * (m / c1) / (sqrt(v / c2) + eps)`` with
    ``c1 = 1 - beta1**t`` and ``c2 = 1 - beta2**t``.
    """
    if set(grads) != set(params):
        raise ContractError("adam_step: params and grads name different tensors")
    t = state.t + 1
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = np.ascontiguousarray(grads[name])
        if not p.flags.c_contiguous:
            raise ContractError(f"adam_step: parameter {name!r} must be C-contiguous")
        if g.shape != p.shape:
            raise ContractError(f"adam_step: grad for {name!r} has shape {g.shape}, param {p.shape}")
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p)
            v = np.zeros_like(p)
        elif m.shape != p.shape:
            raise ContractError(f"adam_step: state for {name!r} has shape {m.shape}, param {p.shape}")
        _kernels.adam_update(p.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1),
                             lr, beta1, beta2, eps, c1, c2)
        state.m[name] = m
        state.v[name] = v
    state.t = t
    return params, state
