"""Liquid time-constant neurons: conductance synapses, fused and explicit updates.

Synapse (i -> j) has weight W[i, j] >= 0, reversal potential erev[i, j] and a
sigmoidal gate sigmoid(sigma[i, j] * (v_i - mu[i, j])).  Sensory synapses
(k -> j) are the same with the mapped input u_k as presynaptic value.
"""
from __future__ import annotations

import numpy as np

from .. import numerics as nx
from ..numerics import Tensor

# lower/upper clamp bounds enforced after each optimizer step
CONSTRAINTS = {
    "W": (0.0, np.inf),
    "sensory_W": (0.0, np.inf),
    "cm": (1e-6, 1e3),
    "gleak": (1e-5, 1e3),
    "sigma": (1e-5, 1e3),
    "sensory_sigma": (1e-5, 1e3),
}


def map_input(u: Tensor, mapping: str, input_w: Tensor | None = None, input_b: Tensor | None = None) -> Tensor:
    """identity -> u; linear -> u*w; affine -> u*w + b (w, b per feature)."""
    if mapping == "identity":
        return u
    batch = u.shape[0]
    out = nx.mul(u, nx.rows(input_w, batch))
    if mapping == "linear":
        return out
    if mapping == "affine":
        return nx.add(out, nx.rows(input_b, batch))
    raise ValueError(f"unknown input mapping {mapping!r}")


def synapse_gate(v_pre, mu, sigma) -> Tensor:
    return nx.sigmoid(nx.mul(sigma, nx.sub(v_pre, mu)))


def _expand(t: Tensor, batch: int) -> Tensor:
    # [P, N] -> [B, P, N]
    return nx.broadcast_to(nx.reshape(t, (1,) + t.shape), (batch,) + t.shape)


def _pre(v: Tensor, n_post: int) -> Tensor:
    # [B, P] -> [B, P, N], presynaptic value repeated along the postsynaptic axis
    b, p = v.shape
    return nx.broadcast_to(nx.reshape(v, (b, p, 1)), (b, p, n_post))


class LtcSynapses:
    """Batch-expanded synapse tensors, built once per sequence."""

    def __init__(self, p: dict[str, Tensor], batch: int):
        n = p["gleak"].shape[0]
        self.batch = batch
        self.n = n
        self.W = _expand(p["W"], batch)
        self.W_erev = nx.mul(self.W, _expand(p["erev"], batch))
        self.mu = _expand(p["mu"], batch)
        self.sigma = _expand(p["sigma"], batch)
        self.sW = _expand(p["sensory_W"], batch)
        self.sW_erev = nx.mul(self.sW, _expand(p["sensory_erev"], batch))
        self.smu = _expand(p["sensory_mu"], batch)
        self.ssigma = _expand(p["sensory_sigma"], batch)
        self.cm = nx.rows(p["cm"], batch)
        self.gleak = nx.rows(p["gleak"], batch)
        self.gleak_vleak = nx.rows(nx.mul(p["gleak"], p["vleak"]), batch)
        self.vleak = nx.rows(p["vleak"], batch)
        self._per_h: dict[float, tuple[Tensor, Tensor]] = {}

    def _capacitive(self, h: float) -> tuple[Tensor, Tensor]:
        # cm/h and cm/h + gleak depend only on the step size
        if h not in self._per_h:
            cm_h = nx.mul(self.cm, 1.0 / h)
            self._per_h[h] = (cm_h, nx.add(cm_h, self.gleak))
        return self._per_h[h]

    def sensory(self, u_mapped: Tensor) -> tuple[Tensor, Tensor]:
        """Summed sensory conductance and conductance*reversal, each [B, N]."""
        gate = synapse_gate(_pre(u_mapped, self.n), self.smu, self.ssigma)
        return nx.reduce_sum(nx.mul(gate, self.sW), 1), nx.reduce_sum(nx.mul(gate, self.sW_erev), 1)

    def recurrent(self, v: Tensor) -> tuple[Tensor, Tensor]:
        gate = synapse_gate(_pre(v, self.n), self.mu, self.sigma)
        return nx.reduce_sum(nx.mul(gate, self.W), 1), nx.reduce_sum(nx.mul(gate, self.W_erev), 1)

    def fused(self, v: Tensor, sens: tuple[Tensor, Tensor], h: float) -> Tensor:
        s_w, s_we = sens
        r_w, r_we = self.recurrent(v)
        cm_h, base = self._capacitive(h)
        num = nx.add(nx.add(nx.mul(cm_h, v), self.gleak_vleak), nx.add(r_we, s_we))
        den = nx.add(base, nx.add(r_w, s_w))
        return nx.div(num, den)

    def rhs(self, v: Tensor, sens: tuple[Tensor, Tensor]) -> Tensor:
        # sum_i w_i (e_i - v) = sum_i w_i e_i - v * sum_i w_i
        s_w, s_we = sens
        r_w, r_we = self.recurrent(v)
        leak = nx.mul(self.gleak, nx.sub(self.vleak, v))
        syn = nx.sub(nx.add(r_we, s_we), nx.mul(v, nx.add(r_w, s_w)))
        return nx.div(nx.add(leak, syn), self.cm)


def ltc_fused_step(v: Tensor, u_mapped: Tensor, p: dict[str, Tensor], h: float) -> Tensor:
    """One semi-implicit step of size h; the result stays inside the reversal hull."""
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    if not np.all(np.isfinite(v.data)):
        raise nx.NumericError("non-finite LTC state")
    syn = LtcSynapses(p, v.shape[0])
    return syn.fused(v, syn.sensory(u_mapped), h)


def ltc_rhs(v: Tensor, u_mapped: Tensor, p: dict[str, Tensor]) -> Tensor:
    if not np.all(np.isfinite(v.data)):
        raise nx.NumericError("non-finite LTC state")
    syn = LtcSynapses(p, v.shape[0])
    return syn.rhs(v, syn.sensory(u_mapped))


def reversal_hull(v: np.ndarray, p: dict[str, Tensor]) -> tuple[np.ndarray, np.ndarray]:
    """Per-unit [lo, hi] over the current state, vleak and incoming reversal potentials."""
    erev = p["erev"].data
    serev = p["sensory_erev"].data
    incoming_lo = np.minimum(erev.min(axis=0), serev.min(axis=0)) if serev.size else erev.min(axis=0)
    incoming_hi = np.maximum(erev.max(axis=0), serev.max(axis=0)) if serev.size else erev.max(axis=0)
    vleak = p["vleak"].data
    lo = np.minimum(np.minimum(v, vleak), incoming_lo)
    hi = np.maximum(np.maximum(v, vleak), incoming_hi)
    return lo, hi
