"""Discrete LSTM and GRU baselines with stacked gate weights.

LSTM column blocks of W: input, forget, candidate, output.
GRU column blocks of W: update z, reset r, candidate.
"""
from __future__ import annotations

from .. import numerics as nx
from ..numerics import Tensor


def lstm_step(state: tuple[Tensor, Tensor], u: Tensor, p: dict[str, Tensor]) -> tuple[Tensor, Tensor]:
    h, c = state
    n = h.shape[1]
    z = nx.add(nx.matmul(nx.concat([u, h], axis=1), p["W"]), nx.rows(p["bias"], h.shape[0]))
    i = nx.sigmoid(z[:, 0:n])
    f = nx.sigmoid(z[:, n:2 * n])
    g = nx.tanh(z[:, 2 * n:3 * n])
    o = nx.sigmoid(z[:, 3 * n:4 * n])
    c_new = nx.add(nx.mul(f, c), nx.mul(i, g))
    return nx.mul(o, nx.tanh(c_new)), c_new


def split_gru(p: dict[str, Tensor]) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """(W_gates, b_gates, W_cand, b_cand) column blocks of the stacked GRU weights."""
    n = p["W"].shape[1] // 3
    W, bias = p["W"], p["bias"]
    return W[:, 0:2 * n], bias[0:2 * n], W[:, 2 * n:3 * n], bias[2 * n:3 * n]


def gru_step(h: Tensor, u: Tensor, p: dict[str, Tensor], blocks=None) -> Tensor:
    """``blocks`` is a cached :func:`split_gru` result (slicing once per sequence)."""
    n = h.shape[1]
    batch = h.shape[0]
    W_g, b_g, W_c, b_c = blocks if blocks is not None else split_gru(p)
    gates = nx.sigmoid(nx.add(nx.matmul(nx.concat([u, h], axis=1), W_g), nx.rows(b_g, batch)))
    z = gates[:, 0:n]
    r = gates[:, n:2 * n]
    cand = nx.tanh(nx.add(nx.matmul(nx.concat([u, nx.mul(r, h)], axis=1), W_c), nx.rows(b_c, batch)))
    return nx.add(nx.mul(nx.sub(1.0, z), cand), nx.mul(z, h))
