"""Parameter shapes, deterministic initialisation and constraint clamping."""
from __future__ import annotations

import math

import numpy as np

from .. import rng
from ..numerics import Tensor
from . import ltc
from .config import CellConfig

CellParams = dict[str, Tensor]
CellState = tuple[Tensor, ...]

# minimum value allowed for CT-RNN time constants
TAU_BOUNDS = (1e-5, 1e3)


def param_shapes(cfg: CellConfig) -> dict[str, tuple[int, ...]]:
    n, k, o = cfg.hidden_size, cfg.input_size, cfg.output_size
    shapes: dict[str, tuple[int, ...]] = {}
    if cfg.kind == "ltc":
        shapes.update(gleak=(n,), vleak=(n,), cm=(n,),
                      W=(n, n), erev=(n, n), mu=(n, n), sigma=(n, n),
                      sensory_W=(k, n), sensory_erev=(k, n), sensory_mu=(k, n), sensory_sigma=(k, n))
    elif cfg.kind in ("ctrnn", "node"):
        shapes.update(W_rec=(n, n), W_in=(k, n), bias=(n,))
        if cfg.kind == "ctrnn":
            shapes["tau"] = (n,)
    elif cfg.kind == "ctgru":
        shapes.update(W_r=(k + n, n), b_r=(n,), W_s=(k + n, n), b_s=(n,), W_q=(k + n, n), b_q=(n,))
    elif cfg.kind == "lstm":
        shapes.update(W=(k + n, 4 * n), bias=(4 * n,))
    elif cfg.kind == "gru":
        shapes.update(W=(k + n, 3 * n), bias=(3 * n,))
    if cfg.is_ode and cfg.input_mapping in ("linear", "affine"):
        shapes["input_w"] = (k,)
        if cfg.input_mapping == "affine":
            shapes["input_b"] = (k,)
    shapes.update(out_W=(n, o), out_b=(o,))
    return shapes


def _glorot(g: np.random.Generator, shape) -> np.ndarray:
    a = math.sqrt(6.0 / (shape[0] + shape[1]))
    return g.uniform(-a, a, size=shape)


def _draw(cfg: CellConfig, name: str, shape, g: np.random.Generator) -> np.ndarray:
    if cfg.kind == "ltc":
        if name in ("W", "sensory_W"):
            return g.uniform(0.001, 1.0, size=shape)
        if name in ("erev", "sensory_erev"):
            return np.where(g.integers(0, 2, size=shape) == 1, 1.0, -1.0)
        if name in ("mu", "sensory_mu"):
            return g.uniform(0.3, 0.8, size=shape)
        if name in ("sigma", "sensory_sigma"):
            return g.uniform(3.0, 8.0, size=shape)
        if name == "gleak":
            return np.ones(shape)
        if name == "vleak":
            return g.uniform(-0.2, 0.2, size=shape)
        if name == "cm":
            return g.uniform(0.4, 0.6, size=shape)
    if name == "input_w" or name == "tau":
        return np.ones(shape)
    if len(shape) == 2:
        return _glorot(g, shape)
    return np.zeros(shape)


def init_params(cfg: CellConfig, seed: int) -> CellParams:
    return {name: Tensor(_draw(cfg, name, shape, rng.stream(seed, f"param/{name}")), name=name)
            for name, shape in param_shapes(cfg).items()}


def zero_state(cfg: CellConfig, batch: int) -> CellState:
    n = cfg.hidden_size
    if cfg.kind == "lstm":
        return (Tensor(np.zeros((batch, n))), Tensor(np.zeros((batch, n))))
    if cfg.kind == "ctgru":
        return (Tensor(np.zeros((batch, cfg.ctgru_scales, n))),)
    return (Tensor(np.zeros((batch, n))),)


def init_cell(cfg: CellConfig, seed: int, batch: int = 1) -> tuple[CellParams, CellState]:
    cfg.validate()
    return init_params(cfg, seed), zero_state(cfg, batch)


def constraint_bounds(cfg: CellConfig) -> dict[str, tuple[float, float]]:
    if cfg.kind == "ltc":
        return dict(ltc.CONSTRAINTS)
    if cfg.kind == "ctrnn":
        return {"tau": TAU_BOUNDS}
    return {}


def constrain_params(cfg: CellConfig, params: CellParams) -> CellParams:
    """Clamp positivity-constrained tensors back into their feasible ranges."""
    out = dict(params)
    for name, (lo, hi) in constraint_bounds(cfg).items():
        if name in out:
            out[name] = Tensor(np.clip(out[name].data, lo, hi), name=name)
    return out


def check_constraints(cfg: CellConfig, params: CellParams) -> list[str]:
    """Names of tensors currently outside their bounds."""
    return [name for name, (lo, hi) in constraint_bounds(cfg).items()
            if name in params and (np.any(params[name].data < lo) or np.any(params[name].data > hi))]
