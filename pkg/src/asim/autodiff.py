"""Minimal reverse-mode autodiff over dense float64 numpy arrays.

Only the operations the sentence-pair model actually needs are provided:
2-D matmul, elementwise arithmetic, concatenation, masked row softmax with
temperature, masked max-over-time pooling, inverted dropout, stable
cross-entropy, embedding row gather, and the activations. No general
broadcasting (the single exception: adding a 1-D bias row to a 2-D matrix).

Graphs are built eagerly; ``backward(loss)`` runs a single topological pass
and accumulates gradients additively into every ``requires_grad`` leaf.
A graph is confined to one thread; distinct graphs share nothing mutable.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DegenerateMaskError,
    DimensionError,
    NumericError,
    UsageError,
)


class Tensor:
    """Dense float64 value, optionally a node in a backward graph.

    ``grad`` stays ``None`` until a backward pass deposits into it.
    ``op``/``parents`` record provenance for graph nodes and are empty for
    leaves and for results that require no gradient.
    """

    __slots__ = ("data", "grad", "requires_grad", "op", "parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = None
        self.parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad = None

    def _ensure_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def __repr__(self):
        tag = self.op or ("leaf" if not self.requires_grad else "param")
        return f"Tensor(shape={self.data.shape}, {tag})"

    # Small conveniences; the named functions below are the real API.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


def _result(data, parents, backward_fn, op):
    """Wrap an op result; graph edges are kept only when a path needs grads."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.op = op
        out.parents = tuple(parents)
        out._backward = backward_fn
    return out


def _as_mask(mask, length, what):
    if mask is None:
        return np.ones(length, dtype=bool)
    m = np.asarray(mask, dtype=bool)
    if m.shape != (length,):
        raise DimensionError(f"{what} mask has shape {m.shape}, expected ({length},)")
    return m


# ---------------------------------------------------------------------------
# elementwise and linear algebra


def add(a: Tensor, b: Tensor) -> Tensor:
    """a + b for equal shapes, or matrix + 1-D bias row."""
    if a.shape == b.shape:
        def back(g, a=a, b=b):
            if a.requires_grad:
                a._ensure_grad()[...] += g
            if b.requires_grad:
                b._ensure_grad()[...] += g
        return _result(a.data + b.data, (a, b), back, "add")
    if a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:
        def back(g, a=a, b=b):
            if a.requires_grad:
                a._ensure_grad()[...] += g
            if b.requires_grad:
                b._ensure_grad()[...] += g.sum(axis=0)
        return _result(a.data + b.data, (a, b), back, "add")
    raise DimensionError(f"add: incompatible shapes {a.shape} and {b.shape}")


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise DimensionError(f"sub: incompatible shapes {a.shape} and {b.shape}")

    def back(g, a=a, b=b):
        if a.requires_grad:
            a._ensure_grad()[...] += g
        if b.requires_grad:
            b._ensure_grad()[...] -= g

    return _result(a.data - b.data, (a, b), back, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product, equal shapes only."""
    if a.shape != b.shape:
        raise DimensionError(f"mul: incompatible shapes {a.shape} and {b.shape}")

    def back(g, a=a, b=b):
        if a.requires_grad:
            a._ensure_grad()[...] += g * b.data
        if b.requires_grad:
            b._ensure_grad()[...] += g * a.data

    return _result(a.data * b.data, (a, b), back, "mul")


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)

    def back(g, a=a):
        if a.requires_grad:
            a._ensure_grad()[...] += g * s

    return _result(a.data * s, (a,), back, "scale")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Standard 2-D matrix product; dA = dC @ B^T, dB = A^T @ dC."""
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError(
            f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul: inner dimensions disagree for {a.shape} x {b.shape}")

    def back(g, a=a, b=b):
        if a.requires_grad:
            a._ensure_grad()[...] += g @ b.data.T
        if b.requires_grad:
            b._ensure_grad()[...] += a.data.T @ g

    return _result(a.data @ b.data, (a, b), back, "matmul")


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"transpose expects a 2-D tensor, got {a.shape}")

    def back(g, a=a):
        if a.requires_grad:
            a._ensure_grad()[...] += g.T

    return _result(a.data.T.copy(), (a,), back, "transpose")


def reshape(a: Tensor, shape) -> Tensor:
    def back(g, a=a):
        if a.requires_grad:
            a._ensure_grad()[...] += g.reshape(a.data.shape)

    return _result(a.data.reshape(shape), (a,), back, "reshape")


def concat(parts, axis: int = -1) -> Tensor:
    """Concatenate along the last (or given) axis; 1-D and 2-D supported."""
    parts = list(parts)
    if not parts:
        raise UsageError("concat of zero tensors")
    nd = parts[0].data.ndim
    ax = axis if axis >= 0 else nd + axis
    sizes = [p.shape[ax] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def back(g, parts=parts, offsets=offsets, ax=ax):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                idx = (slice(None),) * ax + (slice(lo, hi),)
                p._ensure_grad()[...] += g[idx]

    return _result(np.concatenate([p.data for p in parts], axis=ax),
                   parts, back, "concat")


def sum_all(a: Tensor) -> Tensor:
    def back(g, a=a):
        if a.requires_grad:
            a._ensure_grad()[...] += g

    return _result(a.data.sum(), (a,), back, "sum")


# ---------------------------------------------------------------------------
# activations


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)

    def back(g, a=a, out_data=out_data):
        if a.requires_grad:
            a._ensure_grad()[...] += g * (out_data > 0.0)

    return _result(out_data, (a,), back, "relu")


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def back(g, a=a, out_data=out_data):
        if a.requires_grad:
            a._ensure_grad()[...] += g * (1.0 - out_data * out_data)

    return _result(out_data, (a,), back, "tanh")


def sigmoid(a: Tensor) -> Tensor:
    out_data = _sigmoid(a.data)

    def back(g, a=a, out_data=out_data):
        if a.requires_grad:
            a._ensure_grad()[...] += g * out_data * (1.0 - out_data)

    return _result(out_data, (a,), back, "sigmoid")


def _sigmoid(x):
    # Stable in both tails.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# attention / pooling / regularization / loss


def scaled_softmax_rows(e: Tensor, k: int, mask=None) -> Tensor:
    """Row softmax of e / sqrt(k), restricted to unmasked columns.

    Masked columns receive exactly 0 in the output and propagate no gradient.
    """
    if e.data.ndim != 2:
        raise DimensionError(f"scaled_softmax_rows expects 2-D, got {e.shape}")
    if k <= 0:
        raise ConfigError(f"scaled_softmax_rows: k must be positive, got {k}")
    n, m = e.shape
    col_mask = _as_mask(mask, m, "column")
    if not col_mask.any():
        raise DegenerateMaskError("scaled_softmax_rows: all columns masked")

    logits = e.data[:, col_mask] / np.sqrt(float(k))
    logits = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(logits)
    probs = expv / expv.sum(axis=1, keepdims=True)
    out_data = np.zeros((n, m))
    out_data[:, col_mask] = probs

    def back(g, e=e, probs=probs, col_mask=col_mask, k=k):
        if e.requires_grad:
            gm = g[:, col_mask]
            inner = (gm * probs).sum(axis=1, keepdims=True)
            ge = np.zeros_like(e.data)
            ge[:, col_mask] = probs * (gm - inner) / np.sqrt(float(k))
            e._ensure_grad()[...] += ge

    return _result(out_data, (e,), back, "scaled_softmax_rows")


def max_over_time(v: Tensor, mask=None) -> Tensor:
    """Per-dimension max over unmasked rows; gradient routes to the argmax
    row only (ties break to the lowest index)."""
    if v.data.ndim != 2:
        raise DimensionError(f"max_over_time expects 2-D, got {v.shape}")
    n, d = v.shape
    row_mask = _as_mask(mask, n, "row")
    keep = np.flatnonzero(row_mask)
    if keep.size == 0:
        raise DegenerateMaskError("max_over_time: no unmasked timestep")

    rows = v.data[keep]
    local_arg = rows.argmax(axis=0)
    arg_rows = keep[local_arg]
    out_data = rows[local_arg, np.arange(d)]

    def back(g, v=v, arg_rows=arg_rows, d=d):
        if v.requires_grad:
            np.add.at(v._ensure_grad(), (arg_rows, np.arange(d)), g)

    return _result(out_data, (v,), back, "max_over_time")


def dropout_apply(v: Tensor, rate: float, training: bool, rng_seed: int) -> Tensor:
    """Inverted dropout: zero with probability ``rate`` and scale survivors
    by 1/(1-rate) at train time; identity otherwise."""
    if not (0.0 <= rate < 1.0):
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return v
    rng = np.random.default_rng(rng_seed)
    keep = rng.random(v.shape) >= rate
    factor = keep / (1.0 - rate)

    def back(g, v=v, factor=factor):
        if v.requires_grad:
            v._ensure_grad()[...] += g * factor

    return _result(v.data * factor, (v,), back, "dropout")


def cross_entropy(logits: Tensor, label: int) -> Tensor:
    """-log softmax(logits)[label], max-subtracted for stability."""
    if logits.data.ndim != 1:
        raise DimensionError(f"cross_entropy expects a 1-D logit vector, got {logits.shape}")
    c = logits.shape[0]
    label = int(label)
    if not 0 <= label < c:
        raise DataError(f"label {label} out of range for {c} classes")
    z = logits.data - logits.data.max()
    expz = np.exp(z)
    probs = expz / expz.sum()
    loss = np.log(expz.sum()) - z[label]

    def back(g, logits=logits, probs=probs, label=label):
        if logits.requires_grad:
            delta = probs.copy()
            delta[label] -= 1.0
            logits._ensure_grad()[...] += g * delta

    return _result(np.float64(loss), (logits,), back, "cross_entropy")


def softmax_vec(x: np.ndarray) -> np.ndarray:
    """Plain numpy softmax of a 1-D array (no graph)."""
    z = x - x.max()
    e = np.exp(z)
    return e / e.sum()


def embedding_rows(table: Tensor, ids) -> Tensor:
    """Gather rows ``ids`` of a |V| x d table; scatter-add on backward."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise DimensionError(f"embedding_rows expects 1-D ids, got {ids.shape}")
    if table.data.ndim != 2:
        raise DimensionError(f"embedding table must be 2-D, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise DataError(
            f"token id out of range [0, {table.shape[0]}) in {ids.tolist()}")

    def back(g, table=table, ids=ids):
        if table.requires_grad:
            np.add.at(table._ensure_grad(), ids, g)

    return _result(table.data[ids], (table,), back, "embedding_rows")


# ---------------------------------------------------------------------------
# backward pass and gradient checking


def backward(loss: Tensor) -> None:
    """Populate grads of every reachable requires_grad tensor.

    Visits each node exactly once in reverse topological order; repeated
    use of a tensor accumulates additively.
    """
    if loss.data.size != 1:
        raise UsageError(f"backward root must be scalar, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    topo = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))

    loss._ensure_grad()[...] = 1.0
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)


def zero_grads(tensors) -> None:
    for t in tensors:
        t.zero_grad()


def grad_check(f, inputs, eps: float = 1e-5) -> float:
    """Max relative error between analytic grads and central differences.

    ``f`` rebuilds the graph from the given leaf tensors and returns the
    scalar loss; every requires_grad input is swept coordinate by
    coordinate. Per parameter the error is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8) with |.| the
    max-abs norm over that parameter's coordinates; the max over
    parameters is returned. (A per-coordinate ratio is hopeless in
    float64: deep composites always own a few near-cancelling coordinates
    around 1e-10 whose difference noise swamps the 1e-8 floor.)
    """
    if not (1e-7 <= eps <= 1e-3):
        raise UsageError(f"grad_check eps must lie in [1e-7, 1e-3], got {eps}")
    params = [t for t in inputs if t.requires_grad]
    zero_grads(params)
    loss = f()
    if not np.isfinite(loss.data):
        raise NumericError("grad_check: non-finite loss")
    backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        numeric = np.empty(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = float(f().data)
            flat[i] = orig - eps
            lo = float(f().data)
            flat[i] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise NumericError("grad_check: non-finite loss during sweep")
            numeric[i] = (hi - lo) / (2.0 * eps)
        aflat = a.reshape(-1)
        gap = np.abs(aflat - numeric).max() if flat.size else 0.0
        denom = max(np.abs(aflat).max(initial=0.0),
                    np.abs(numeric).max(initial=0.0), 1e-8)
        worst = max(worst, gap / denom)
    return worst
