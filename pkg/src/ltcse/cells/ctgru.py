"""Continuous-time GRU with M memory traces on a geometric ladder of time scales.

Retrieval (r) and storage (s) weights are softmax attention over the scale
axis, scored by -(log tau_hat - log tau_j)^2.
"""
from __future__ import annotations

import numpy as np

from .. import numerics as nx
from ..numerics import Tensor


def trace_decay(hhat: Tensor, dt: float, tau_scales) -> Tensor:
    """hhat[:, j, :] * exp(-dt / tau_j)."""
    b, m, n = hhat.shape
    decay = np.exp(-dt / np.asarray(tau_scales, dtype=np.float64)).reshape(1, m, 1)
    return nx.mul(hhat, Tensor._wrap(np.broadcast_to(decay, (b, m, n))))


def scale_attention(log_tau: Tensor, log_scales: np.ndarray) -> Tensor:
    """[B, N] log time constants -> [B, M, N] weights summing to 1 over M."""
    b, n = log_tau.shape
    m = log_scales.size
    lt = nx.broadcast_to(nx.reshape(log_tau, (b, 1, n)), (b, m, n))
    ls = Tensor._wrap(np.broadcast_to(log_scales.reshape(1, m, 1), (b, m, n)))
    return nx.softmax(nx.neg(nx.square(nx.sub(lt, ls))), axis=1)


def ctgru_step(hhat: Tensor, u: Tensor, p: dict[str, Tensor], dt: float, tau_scales,
               force_storage: float | None = None) -> Tensor:
    """Advance the traces by dt.

    ``force_storage`` pins every storage weight to a constant (test hook for
    the free-decay law).
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    b, m, n = hhat.shape
    log_scales = np.log(np.asarray(tau_scales, dtype=np.float64))
    if log_scales.size != m:
        raise nx.ShapeError(f"state has {m} traces but {log_scales.size} time scales were given")
    h = nx.reduce_sum(hhat, 1)
    uh = nx.concat([u, h], axis=1)
    r = scale_attention(nx.add(nx.matmul(uh, p["W_r"]), nx.rows(p["b_r"], b)), log_scales)
    recalled = nx.reduce_sum(nx.mul(r, hhat), 1)
    q = nx.tanh(nx.add(nx.matmul(nx.concat([u, recalled], axis=1), p["W_q"]), nx.rows(p["b_q"], b)))
    if force_storage is None:
        s = scale_attention(nx.add(nx.matmul(uh, p["W_s"]), nx.rows(p["b_s"], b)), log_scales)
    else:
        s = Tensor._wrap(np.full((b, m, n), float(force_storage)))
    q3 = nx.broadcast_to(nx.reshape(q, (b, 1, n)), (b, m, n))
    mixed = nx.add(nx.mul(nx.sub(1.0, s), hhat), nx.mul(s, q3))
    return trace_decay(mixed, dt, tau_scales)
