"""LSTM cell and sequence kernels on top of the autodiff core.

``lstm_step`` is built from autodiff primitives and serves as the reference
cell. ``lstm_sequence`` is a single fused graph node running the whole
recurrence with a hand-written backward-through-time pass; it exists purely
for speed and is cross-checked against the step composition in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionError


@dataclass
class LstmParams:
    """Gate weights stacked as [input rows; hidden rows] -> hidden columns."""

    input_dim: int
    hidden_dim: int
    w_i: Tensor
    w_f: Tensor
    w_o: Tensor
    w_g: Tensor
    b_i: Tensor
    b_f: Tensor
    b_o: Tensor
    b_g: Tensor

    def gates(self):
        return (self.w_i, self.w_f, self.w_o, self.w_g,
                self.b_i, self.b_f, self.b_o, self.b_g)

    def named_tensors(self, prefix: str) -> dict[str, Tensor]:
        names = ("w_i", "w_f", "w_o", "w_g", "b_i", "b_f", "b_o", "b_g")
        return {f"{prefix}.{n}": t for n, t in zip(names, self.gates())}


def init_lstm(input_dim: int, hidden_dim: int, rng: np.random.Generator,
              trainable: bool = True) -> LstmParams:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases,
    forget-gate bias +1 so memory persists early in training."""
    fan_in = input_dim + hidden_dim
    bound = 1.0 / np.sqrt(fan_in)

    def w():
        return Tensor(rng.uniform(-bound, bound, size=(fan_in, hidden_dim)),
                      requires_grad=trainable)

    def b(fill=0.0):
        return Tensor(np.full(hidden_dim, fill), requires_grad=trainable)

    return LstmParams(input_dim, hidden_dim,
                      w(), w(), w(), w(),
                      b(), b(1.0), b(), b())


def _check_dims(p: LstmParams, input_dim: int):
    fan_in = p.input_dim + p.hidden_dim
    if input_dim != p.input_dim:
        raise DimensionError(
            f"lstm input width {input_dim} != params input_dim {p.input_dim}")
    for w in (p.w_i, p.w_f, p.w_o, p.w_g):
        if w.shape != (fan_in, p.hidden_dim):
            raise DimensionError(
                f"gate weight shape {w.shape}, expected {(fan_in, p.hidden_dim)}")


def lstm_step(x_t: Tensor, h_prev: Tensor, c_prev: Tensor,
              p: LstmParams) -> tuple[Tensor, Tensor]:
    """One LSTM cell update on 1-D vectors; differentiable through all paths."""
    if x_t.data.ndim != 1 or h_prev.data.ndim != 1 or c_prev.data.ndim != 1:
        raise DimensionError("lstm_step expects 1-D x_t, h_prev, c_prev")
    _check_dims(p, x_t.shape[0])
    if h_prev.shape[0] != p.hidden_dim or c_prev.shape[0] != p.hidden_dim:
        raise DimensionError(
            f"state width {h_prev.shape[0]}/{c_prev.shape[0]} != hidden_dim {p.hidden_dim}")

    z = ad.reshape(ad.concat([x_t, h_prev]), (1, -1))
    i = ad.sigmoid(ad.add(ad.matmul(z, p.w_i), p.b_i))
    f = ad.sigmoid(ad.add(ad.matmul(z, p.w_f), p.b_f))
    o = ad.sigmoid(ad.add(ad.matmul(z, p.w_o), p.b_o))
    g = ad.tanh(ad.add(ad.matmul(z, p.w_g), p.b_g))
    c = ad.add(ad.mul(f, ad.reshape(c_prev, (1, -1))), ad.mul(i, g))
    h = ad.mul(o, ad.tanh(c))
    return ad.reshape(h, (-1,)), ad.reshape(c, (-1,))


def lstm_sequence(xs: Tensor, p: LstmParams, reverse: bool = False) -> Tensor:
    """Run the recurrence over all rows of ``xs`` (zero initial state).

    Output row t is the hidden state at input position t regardless of
    direction; ``reverse=True`` processes the rows last-to-first.
    """
    if xs.data.ndim != 2:
        raise DimensionError(f"lstm_sequence expects 2-D input, got {xs.shape}")
    n = xs.shape[0]
    if n == 0:
        raise DimensionError("lstm_sequence: empty sequence")
    _check_dims(p, xs.shape[1])
    h = p.hidden_dim

    order = np.arange(n - 1, -1, -1) if reverse else np.arange(n)
    x_proc = xs.data[order]

    wx = np.concatenate([w.data[:p.input_dim] for w in (p.w_i, p.w_f, p.w_o, p.w_g)], axis=1)
    wh = np.concatenate([w.data[p.input_dim:] for w in (p.w_i, p.w_f, p.w_o, p.w_g)], axis=1)
    bias = np.concatenate([b.data for b in (p.b_i, p.b_f, p.b_o, p.b_g)])

    pre = x_proc @ wx + bias                    # per-step input contribution
    gates = np.empty((n, 4 * h))
    cells = np.empty((n, h))
    tanh_c = np.empty((n, h))
    hidden = np.empty((n, h))

    h_t = np.zeros(h)
    c_t = np.zeros(h)
    for t in range(n):
        a = pre[t] + h_t @ wh
        a[:3 * h] = _sigm(a[:3 * h])
        a[3 * h:] = np.tanh(a[3 * h:])
        gates[t] = a
        c_t = a[h:2 * h] * c_t + a[:h] * a[3 * h:]
        cells[t] = c_t
        tc = np.tanh(c_t)
        tanh_c[t] = tc
        h_t = a[2 * h:3 * h] * tc
        hidden[t] = h_t

    out_data = hidden[::-1].copy() if reverse else hidden

    def back(g, xs=xs, p=p, order=order, x_proc=x_proc, wx=wx, wh=wh,
             gates=gates, cells=cells, tanh_c=tanh_c, hidden=hidden, n=n, h=h):
        d_out = g[order]
        da = np.empty((n, 4 * h))
        dh_next = np.zeros(h)
        dc_next = np.zeros(h)
        for t in range(n - 1, -1, -1):
            gi = gates[t, :h]
            gf = gates[t, h:2 * h]
            go = gates[t, 2 * h:3 * h]
            gg = gates[t, 3 * h:]
            dh = d_out[t] + dh_next
            tc = tanh_c[t]
            dc = dc_next + dh * go * (1.0 - tc * tc)
            c_prev = cells[t - 1] if t > 0 else 0.0
            da[t, :h] = dc * gg * gi * (1.0 - gi)
            da[t, h:2 * h] = dc * c_prev * gf * (1.0 - gf)
            da[t, 2 * h:3 * h] = dh * tc * go * (1.0 - go)
            da[t, 3 * h:] = dc * gi * (1.0 - gg * gg)
            dh_next = da[t] @ wh.T
            dc_next = dc * gf

        if xs.requires_grad:
            xs._ensure_grad()[order] += da @ wx.T
        d_wx = x_proc.T @ da
        h_prev_rows = np.vstack([np.zeros((1, h)), hidden[:-1]])
        d_wh = h_prev_rows.T @ da
        d_b = da.sum(axis=0)
        for idx, (w, b) in enumerate(((p.w_i, p.b_i), (p.w_f, p.b_f),
                                      (p.w_o, p.b_o), (p.w_g, p.b_g))):
            lo, hi = idx * h, (idx + 1) * h
            if w.requires_grad:
                gw = w._ensure_grad()
                gw[:p.input_dim] += d_wx[:, lo:hi]
                gw[p.input_dim:] += d_wh[:, lo:hi]
            if b.requires_grad:
                b._ensure_grad()[...] += d_b[lo:hi]

    parents = (xs,) + p.gates()
    out = Tensor(out_data)
    if any(t.requires_grad for t in parents):
        out.requires_grad = True
        out.op = "lstm_sequence"
        out.parents = parents
        out._backward = back
    return out


def bilstm(xs: Tensor, p_fwd: LstmParams, p_bwd: LstmParams) -> Tensor:
    """Concatenate forward and backward hidden states per position."""
    return ad.concat([lstm_sequence(xs, p_fwd),
                      lstm_sequence(xs, p_bwd, reverse=True)], axis=1)


def _sigm(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
