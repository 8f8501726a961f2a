"""A minimal reverse-mode tape over numpy float64 arrays.

Every op takes `Var`s (plain arrays are wrapped as constants) and returns a
`Var`.  If some input belongs to a `Tape`, the op appends a node holding a
backward closure; `Tape.backward` replays the nodes in reverse creation order.
Without a tape nothing is recorded, which is what inference uses.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

LOG_FLOOR = 1e-12


class UnregisteredParameter(KeyError):
    pass


class Var:
    __slots__ = ("value", "tape", "index", "name")

    def __init__(self, value, tape: "Tape | None" = None, name: str | None = None):
        self.value = np.asarray(value, dtype=np.float64)
        self.tape = tape
        self.index = -1
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Var{label}(shape={self.value.shape})"


class Tape:
    def __init__(self, track_kinks: bool = False):
        self.nodes: list[tuple[Var, Sequence[Var], Callable]] = []
        self.params: dict[str, Var] = {}
        # sign patterns of relu/leaky-relu inputs, for gradient checking
        self.kinks: list[np.ndarray] | None = [] if track_kinks else None

    def param(self, name: str, value) -> Var:
        var = Var(np.array(value, dtype=np.float64), self, name)
        self.params[name] = var
        return var

    def constant(self, value) -> Var:
        return Var(value)

    def record(self, out: Var, parents: Sequence[Var], backward: Callable) -> Var:
        out.tape = self
        out.index = len(self.nodes)
        self.nodes.append((out, parents, backward))
        return out

    def backward(self, loss: Var) -> "Gradients":
        if loss.value.size != 1:
            raise ValueError("backward needs a scalar loss")
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
        for out, parents, fn in reversed(self.nodes):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for parent, pg in zip(parents, fn(g)):
                if pg is None or parent.tape is not self:
                    continue
                key = id(parent)
                grads[key] = grads[key] + pg if key in grads else pg
        return Gradients(
            {
                name: grads.get(id(var), np.zeros_like(var.value))
                for name, var in self.params.items()
            }
        )


class Gradients(dict):
    def __missing__(self, key):
        raise UnregisteredParameter(f"unregistered parameter {key!r}")


def as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _emit(value, parents: Sequence[Var], backward: Callable) -> Var:
    out = Var(value)
    tape = next((p.tape for p in parents if p.tape is not None), None)
    if tape is not None:
        tape.record(out, parents, backward)
    return out


def _shape_check(cond: bool, message: str):
    if not cond:
        raise ValueError(f"shape mismatch: {message}")


# ---- dense ops ---------------------------------------------------------------


def matmul_t(x, a) -> Var:
    """x @ a.T for x (n, k) and a (l, k)."""
    x, a = as_var(x), as_var(a)
    _shape_check(
        x.value.ndim == 2 and a.value.ndim == 2 and x.shape[1] == a.shape[1],
        f"{x.shape} x {a.shape}^T",
    )
    xv, av = x.value, a.value
    return _emit(xv @ av.T, (x, a), lambda g: (g @ av, g.T @ xv))


def add_row(x, b) -> Var:
    """Add the (1, l) row vector b to every row of x."""
    x, b = as_var(x), as_var(b)
    _shape_check(b.value.shape == (1, x.shape[1]), f"bias {b.shape} for {x.shape}")
    return _emit(x.value + b.value, (x, b), lambda g: (g, g.sum(axis=0, keepdims=True)))


def add(x, y) -> Var:
    x, y = as_var(x), as_var(y)
    _shape_check(x.shape == y.shape, f"{x.shape} + {y.shape}")
    return _emit(x.value + y.value, (x, y), lambda g: (g, g))


def scale(x, c: float) -> Var:
    x = as_var(x)
    return _emit(x.value * c, (x,), lambda g: (g * c,))


def total(x) -> Var:
    x = as_var(x)
    shape = x.shape
    return _emit(x.value.sum(), (x,), lambda g: (np.full(shape, float(g)),))


def take(x, key) -> Var:
    """Fancy indexing x[key]; repeated indices accumulate in the backward pass."""
    x = as_var(x)
    shape = x.shape

    def backward(g):
        dx = np.zeros(shape)
        np.add.at(dx, key, g)
        return (dx,)

    return _emit(x.value[key], (x,), backward)


def relu(x) -> Var:
    x = as_var(x)
    if x.tape is not None and x.tape.kinks is not None:
        x.tape.kinks.append(np.sign(x.value))
    mask = x.value > 0
    return _emit(np.where(mask, x.value, 0.0), (x,), lambda g: (g * mask,))


def leaky_relu(x, slope: float = 0.2) -> Var:
    x = as_var(x)
    if x.tape is not None and x.tape.kinks is not None:
        x.tape.kinks.append(np.sign(x.value))
    factor = np.where(x.value > 0, 1.0, slope)
    return _emit(x.value * factor, (x,), lambda g: (g * factor,))


def dropout(x, p: float, train: bool, rng: np.random.Generator | None = None) -> Var:
    """Inverted dropout: identity at inference, zero-and-rescale in training."""
    if not 0 <= p < 1:
        raise ValueError("dropout rate must lie in [0, 1)")
    x = as_var(x)
    if not train or p == 0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return _emit(x.value * mask, (x,), lambda g: (g * mask,))


def softmax_rows(x) -> Var:
    x = as_var(x)
    z = x.value - x.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=1, keepdims=True)),)

    return _emit(s, (x,), backward)


def cross_entropy(pred, target) -> Var:
    """Mean over rows of -sum(target * log(pred)), log clamped at LOG_FLOOR."""
    pred, target = as_var(pred), as_var(target)
    _shape_check(pred.shape == target.shape, f"prediction {pred.shape} vs target {target.shape}")
    p, t = pred.value, target.value
    n = p.shape[0]
    clamped = np.maximum(p, LOG_FLOOR)
    loss = -(t * np.log(clamped)).sum() / n

    def backward(g):
        return (float(g) * np.where(p > LOG_FLOOR, -t / clamped, 0.0) / n, None)

    return _emit(loss, (pred, target), backward)


# ---- graph ops ---------------------------------------------------------------


def sparse_aggregate(weights, x, rows: np.ndarray, cols: np.ndarray, n: int) -> Var:
    """out[r] = sum over edges e with rows[e] == r of weights[e] * x[cols[e]]."""
    weights, x = as_var(weights), as_var(x)
    _shape_check(weights.shape == rows.shape, f"{weights.shape} weights for {rows.shape} edges")
    w, xv = weights.value, x.value
    mat = sp.csr_matrix((w, (rows, cols)), shape=(n, xv.shape[0]))

    def backward(g):
        dx = mat.T @ g
        dw = np.einsum("ij,ij->i", g[rows], xv[cols]) if weights.tape is not None else None
        return (dw, dx)

    return _emit(mat @ xv, (weights, x), backward)


def segment_softmax(e, segments: np.ndarray, n: int) -> Var:
    """Softmax of the entries of e within each segment id in [0, n)."""
    e = as_var(e)
    ev = e.value
    top = np.full(n, -np.inf)
    np.maximum.at(top, segments, ev)
    ex = np.exp(ev - top[segments])
    denom = np.bincount(segments, weights=ex, minlength=n)
    alpha = ex / denom[segments]

    def backward(g):
        inner = np.bincount(segments, weights=alpha * g, minlength=n)
        return (alpha * (g - inner[segments]),)

    return _emit(alpha, (e,), backward)
