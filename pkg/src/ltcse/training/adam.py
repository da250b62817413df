from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numerics import NumericError, Tensor


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: dict[str, Tensor]) -> "AdamState":
        return cls({k: np.zeros(p.shape) for k, p in params.items()},
                   {k: np.zeros(p.shape) for k, p in params.items()}, 0)


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], state: AdamState,
              lr: float = 0.01, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> tuple[dict[str, Tensor], AdamState]:
    """Bias-corrected Adam; returns new parameters and a new state."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}")
    t = state.t + 1
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter has {p.shape}")
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * g * g
        step = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        new_params[name] = Tensor(p.data - step, name=name)
        new_m[name], new_v[name] = m, v
    return new_params, AdamState(new_m, new_v, t)
