"""Fixed-step explicit integrators."""
from __future__ import annotations

from typing import Callable

import numpy as np

from ..numerics import NumericError, Tensor, add, is_checked, mul


def _finite(t: Tensor, what: str) -> Tensor:
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite derivative in {what}")
    return t


def euler_step(f: Callable[[Tensor], Tensor], x: Tensor, h: float) -> Tensor:
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    k = f(x)
    if is_checked():
        _finite(k, "euler_step")
    return add(x, mul(k, h))


def rk4_step(f: Callable[[Tensor], Tensor], x: Tensor, h: float) -> Tensor:
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h}")
    k1 = f(x)
    k2 = f(add(x, mul(k1, h / 2)))
    k3 = f(add(x, mul(k2, h / 2)))
    k4 = f(add(x, mul(k3, h)))
    if is_checked():
        for k in (k1, k2, k3, k4):
            _finite(k, "rk4_step")
    incr = add(add(k1, mul(k2, 2.0)), add(mul(k3, 2.0), k4))
    return add(x, mul(incr, h / 6))


SOLVER_STEPS = {"euler": euler_step, "rk4": rk4_step}
