"""Minimal reverse-mode autodiff over dense float64 numpy arrays.

Values are computed eagerly; when a :class:`Tape` is active on the current
thread, every primitive also records the graph edges it needs for the
backward pass.  Outside a tape the same functions run as plain numpy code,
which is what inference and Monte-Carlo sampling use.

The op set is deliberately small: exactly what a bi-LSTM encoder, selector
MLPs and a masked-attention decoder need, plus a finite-difference gradient
checker used throughout the test suite.
"""

from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import AllMaskedError, NonFiniteGradient, NonScalarLoss

_LOCAL = threading.local()


def _current_tape() -> "Tape | None":
    return getattr(_LOCAL, "tape", None)


class Tape:
    """Recording context for one thread of execution.

    Entering a tape turns recording on; primitives executed inside append
    themselves in creation order, which is already a topological order of
    the graph.  A tape is confined to the thread that opened it.
    """

    __slots__ = ("n_nodes",)

    def __init__(self):
        self.n_nodes = 0

    def __enter__(self) -> "Tape":
        if _current_tape() is not None:
            raise RuntimeError("tapes do not nest")
        _LOCAL.tape = self
        return self

    def __exit__(self, *exc):
        _LOCAL.tape = None
        return False


class no_tape:
    """Suspend recording on this thread (e.g. for baselines mid-step)."""

    __slots__ = ("_prev",)

    def __enter__(self):
        self._prev = _current_tape()
        _LOCAL.tape = None
        return self

    def __exit__(self, *exc):
        _LOCAL.tape = self._prev
        return False


class Tensor:
    """A float64 array plus (optionally) the edges used for backprop.

    Tensors produced under an active tape carry their parent tensors and a
    vector-Jacobian product; tensors made outside a tape, and constants,
    carry neither.  Published tensors are treated as immutable: nothing in
    this module writes to ``data`` after construction.
    """

    __slots__ = ("data", "parents", "vjp", "needs_grad", "name")

    def __init__(self, data, parents=(), vjp=None, needs_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = parents
        self.vjp = vjp
        self.needs_grad = needs_grad
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    # operator sugar; scalars and ndarrays are lifted to constants
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

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


class Parameter(Tensor):
    """A named trainable leaf; the only tensors gradients are reported for."""

    def __init__(self, data, name: str):
        super().__init__(np.array(data, dtype=np.float64), needs_grad=True, name=name)


def as_tensor(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x)


def constant(x) -> Tensor:
    """A tensor that never receives gradient (copies Tensor input's data)."""
    if isinstance(x, Tensor):
        return Tensor(x.data)
    return Tensor(x)


def _record(data, parents, vjp) -> Tensor:
    tape = _current_tape()
    needs = any(p.needs_grad for p in parents)
    if tape is None or not needs:
        return Tensor(data, needs_grad=needs)
    tape.n_nodes += 1
    return Tensor(data, parents=parents, vjp=vjp, needs_grad=True)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum g over the axes that numpy broadcasting added or stretched."""
    if g.shape == shape:
        return g
    if shape == ():
        return np.array(np.sum(g))
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitives


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _record(out, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _record(out, (a, b), vjp)


def neg(a) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        return (-g,)

    return _record(-a.data, (a,), vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def vjp(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return _record(out, (a, b), vjp)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def vjp(g):
        return (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        )

    return _record(out, (a, b), vjp)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data @ b.data
    a_nd, b_nd = a.data.ndim, b.data.ndim

    def vjp(g):
        if a_nd == 2 and b_nd == 2:
            return g @ b.data.T, a.data.T @ g
        if a_nd == 1 and b_nd == 2:
            return b.data @ g, np.outer(a.data, g)
        if a_nd == 2 and b_nd == 1:
            return np.outer(g, b.data), a.data.T @ g
        # 1D @ 1D -> scalar
        return g * b.data, g * a.data

    return _record(out, (a, b), vjp)


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))

    def vjp(g):
        return (g * out * (1.0 - out),)

    return _record(out, (a,), vjp)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)

    def vjp(g):
        return (g * (1.0 - out * out),)

    return _record(out, (a,), vjp)


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)

    def vjp(g):
        return (g * out,)

    return _record(out, (a,), vjp)


def log(a) -> Tensor:
    a = as_tensor(a)
    out = np.log(a.data)

    def vjp(g):
        return (g / a.data,)

    return _record(out, (a,), vjp)


def abs_(a) -> Tensor:
    """|a| with subgradient 0 at the kink (np.sign(0) == 0)."""
    a = as_tensor(a)

    def vjp(g):
        return (g * np.sign(a.data),)

    return _record(np.abs(a.data), (a,), vjp)


def clip(a, lo: float, hi: float) -> Tensor:
    """Clamp values into [lo, hi]; gradient passes only where unclipped."""
    a = as_tensor(a)
    out = np.clip(a.data, lo, hi)
    inside = (a.data > lo) & (a.data < hi)

    def vjp(g):
        return (g * inside,)

    return _record(out, (a,), vjp)


def sum_(a) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        return (np.full(a.data.shape, float(g)),)

    return _record(np.sum(a.data), (a,), vjp)


def mean(a) -> Tensor:
    a = as_tensor(a)
    k = a.data.size

    def vjp(g):
        return (np.full(a.data.shape, float(g) / k),)

    return _record(np.mean(a.data), (a,), vjp)


def max_(a) -> Tensor:
    """Max of a vector; ties send the gradient to the lowest index."""
    a = as_tensor(a)
    idx = int(np.argmax(a.data))

    def vjp(g):
        ga = np.zeros_like(a.data)
        ga[idx] = float(g)
        return (ga,)

    return _record(a.data[idx], (a,), vjp)


def concat(parts: Sequence) -> Tensor:
    """Concatenate vectors (scalars count as length-1) into one vector."""
    parts = tuple(as_tensor(p) for p in parts)
    sizes = [p.data.size for p in parts]
    out = np.concatenate([np.atleast_1d(p.data) for p in parts])
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(g[offsets[i]:offsets[i + 1]].reshape(p.data.shape)
                     for i, p in enumerate(parts))

    return _record(out, parts, vjp)


def slice_(a, start: int, stop: int) -> Tensor:
    a = as_tensor(a)
    n = a.data.shape[0]

    def vjp(g):
        ga = np.zeros(n)
        ga[start:stop] = g
        return (ga,)

    return _record(a.data[start:stop], (a,), vjp)


def pick(a, i: int) -> Tensor:
    """Scalar element of a vector."""
    a = as_tensor(a)

    def vjp(g):
        ga = np.zeros_like(a.data)
        ga[i] = float(g)
        return (ga,)

    return _record(a.data[i], (a,), vjp)


def row(m, i: int) -> Tensor:
    m = as_tensor(m)

    def vjp(g):
        gm = np.zeros_like(m.data)
        gm[i] = g
        return (gm,)

    return _record(m.data[i], (m,), vjp)


def stack_rows(rows: Sequence) -> Tensor:
    rows = tuple(as_tensor(r) for r in rows)
    out = np.stack([r.data for r in rows])

    def vjp(g):
        return tuple(g[i] for i in range(len(rows)))

    return _record(out, rows, vjp)


def append_columns(m, v) -> Tensor:
    """Append the same vector v to every row of matrix m."""
    m, v = as_tensor(m), as_tensor(v)
    n, d = m.data.shape
    out = np.concatenate([m.data, np.broadcast_to(v.data, (n, v.data.size))], axis=1)

    def vjp(g):
        return g[:, :d], g[:, d:].sum(axis=0)

    return _record(out, (m, v), vjp)


def hstack(a, b) -> Tensor:
    """Concatenate two matrices along columns."""
    a, b = as_tensor(a), as_tensor(b)
    da = a.data.shape[1]
    out = np.concatenate([a.data, b.data], axis=1)

    def vjp(g):
        return g[:, :da], g[:, da:]

    return _record(out, (a, b), vjp)


def replace_where(x, keep: np.ndarray, fill: np.ndarray) -> Tensor:
    """Keep x where `keep` is true, constant `fill` elsewhere.

    Gradient flows only through the kept entries.
    """
    x = as_tensor(x)
    keep = np.asarray(keep, dtype=bool)
    out = np.where(keep, x.data, fill)

    def vjp(g):
        return (np.where(keep, g, 0.0),)

    return _record(out, (x,), vjp)


def scatter_with_fill(values, positions: np.ndarray, size: int, fill) -> Tensor:
    """Vector of length `size` with `values` at `positions`, `fill` elsewhere.

    `fill` is a constant array of length `size`; gradient flows only into
    `values`.  Used to pin structural (end-of-sequence) selector slots.
    """
    values = as_tensor(values)
    out = np.array(fill, dtype=np.float64)
    out[positions] = values.data

    def vjp(g):
        return (g[positions],)

    return _record(out, (values,), vjp)


def embedding_rows(table, ids: Sequence[int]) -> Tensor:
    """Gather rows of an embedding table; backward scatter-adds."""
    table = as_tensor(table)
    idx = np.asarray(ids, dtype=np.intp)
    out = table.data[idx]

    def vjp(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx, g)
        return (gt,)

    return _record(out, (table,), vjp)


def log_softmax(a) -> Tensor:
    """Numerically stable log-softmax of a vector (max is subtracted)."""
    a = as_tensor(a)
    shift = a.data - np.max(a.data)
    out = shift - np.log(np.sum(np.exp(shift)))

    def vjp(g):
        return (g - np.exp(out) * np.sum(g),)

    return _record(out, (a,), vjp)


def cross_entropy(logits, target: int) -> Tensor:
    """-log softmax(logits)[target]."""
    return neg(pick(log_softmax(logits), target))


def masked_softmax(scores, mask) -> Tensor:
    """Softmax over the positions where `mask` is positive.

    Output is exactly zero wherever mask[i] == 0 and the remaining entries
    sum to one.  `mask` may be a constant binary vector or a tensor of soft
    weights in (0, 1]; gradients flow into both `scores` and a soft `mask`.

    Raises AllMaskedError when no position has positive weight (the
    normalizing denominator would vanish).
    """
    scores, mask = as_tensor(scores), as_tensor(mask)
    w = mask.data
    active = w > 0.0
    if not np.any(active):
        raise AllMaskedError("selection mask has no positive entry")
    # shift by the max *surviving* score so the largest exp is 1
    e = np.zeros_like(scores.data)
    e[active] = np.exp(scores.data[active] - np.max(scores.data[active]))
    num = e * w
    z = np.sum(num)
    out = num / z

    def vjp(g):
        dot = np.dot(g, out)
        g_scores = out * (g - dot)
        g_mask = (e / z) * (g - dot)
        return g_scores, g_mask

    return _record(out, (scores, mask), vjp)


def dropout(a, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; call sites only apply it while training."""
    a = as_tensor(a)
    if rate <= 0.0:
        return a
    keep = (rng.random(a.data.shape) >= rate) / (1.0 - rate)

    def vjp(g):
        return (g * keep,)

    return _record(a.data * keep, (a,), vjp)


# ---------------------------------------------------------------------------
# backward pass


GradientMap = dict  # parameter name -> np.ndarray of the parameter's shape


def backward(loss: Tensor) -> GradientMap:
    """Reverse-mode sweep from a recorded scalar.

    Visits each reachable node exactly once in reverse topological order,
    accumulating gradients additively, and returns {parameter name: grad}
    for exactly the parameters the loss depends on.

    Raises NonScalarLoss for non-scalar input and NonFiniteGradient if any
    parameter gradient comes out NaN/Inf.
    """
    if loss.data.shape != ():
        raise NonScalarLoss(f"loss has shape {loss.data.shape}, expected scalar")

    # iterative postorder over the recorded graph
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.needs_grad and id(p) not in seen:
                stack.append((p, False))

    grads: dict[int, np.ndarray] = {id(loss): np.array(1.0)}
    result: GradientMap = {}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Parameter):
            if node.name in result:
                result[node.name] = result[node.name] + g
            else:
                result[node.name] = np.array(g, dtype=np.float64)
            continue
        if node.vjp is None:
            continue
        parent_grads = node.vjp(g)
        for p, pg in zip(node.parents, parent_grads):
            if not p.needs_grad:
                continue
            acc = grads.get(id(p))
            if acc is None:
                grads[id(p)] = np.array(pg, dtype=np.float64)
            else:
                acc += pg

    for name, g in result.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"gradient of {name!r} is not finite")
    return result


# ---------------------------------------------------------------------------
# finite-difference checking


def finite_difference_gradients(
    loss_builder: Callable[[], Tensor],
    params: Iterable[Parameter],
    step: float = 1e-5,
) -> GradientMap:
    """Central-difference gradients of a deterministic loss builder.

    The builder is re-invoked with each parameter entry perturbed in place;
    it must therefore read parameter values at call time and be free of
    unseeded randomness.
    """
    out: GradientMap = {}
    for p in params:
        flat = p.data.reshape(-1)
        g = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = float(loss_builder().data)
            flat[i] = orig - step
            down = float(loss_builder().data)
            flat[i] = orig
            g[i] = (up - down) / (2.0 * step)
        out[p.name] = g.reshape(p.data.shape)
    return out


def max_relative_error(analytic: GradientMap, numeric: GradientMap) -> float:
    """max over all coordinates of |analytic - numeric| / max(1, |numeric|)."""
    worst = 0.0
    for name, num in numeric.items():
        ana = analytic.get(name, np.zeros_like(num))
        denom = np.maximum(1.0, np.abs(num))
        worst = max(worst, float(np.max(np.abs(ana - num) / denom)))
    return worst


def check_gradients(
    loss_builder: Callable[[], Tensor],
    params: Iterable[Parameter],
    step: float = 1e-5,
) -> float:
    """Compare taped gradients against central differences.

    Returns the max relative error over every parameter coordinate.
    """
    params = list(params)
    with Tape():
        loss = loss_builder()
    analytic = backward(loss)
    numeric = finite_difference_gradients(loss_builder, params, step)
    return max_relative_error(analytic, numeric)
