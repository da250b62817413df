from __future__ import annotations

import numpy as np

from .. import numerics as nx
from ..numerics import Tensor
from .config import CellConfig
from .ctgru import ctgru_step
from .ctrnn import InputDrive
from .gated import gru_step, lstm_step, split_gru
from .ltc import LtcSynapses, map_input
from .params import CellParams, CellState, zero_state
from .solvers import SOLVER_STEPS


class Stepper:
    """Advances one cell by one input sample; batch-expanded tensors are built once."""

    def __init__(self, cfg: CellConfig, params: CellParams, batch: int):
        self.cfg = cfg
        self.p = params
        self.batch = batch
        self.syn = LtcSynapses(params, batch) if cfg.kind == "ltc" else None
        self.out_b = nx.rows(params["out_b"], batch)
        self.tau_scales = cfg.tau_scales() if cfg.kind == "ctgru" else None
        self.gru_blocks = split_gru(params) if cfg.kind == "gru" else None

    def _mapped(self, u: Tensor) -> Tensor:
        return map_input(u, self.cfg.input_mapping, self.p.get("input_w"), self.p.get("input_b"))

    def step(self, state: CellState, u: Tensor, dt: float = 1.0) -> CellState:
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        cfg = self.cfg
        if u.shape != (self.batch, cfg.input_size):
            raise nx.ShapeError(f"input step has shape {u.shape}, expected {(self.batch, cfg.input_size)}")
        if cfg.kind == "lstm":
            return lstm_step(state, u, self.p)
        if cfg.kind == "gru":
            return (gru_step(state[0], u, self.p, self.gru_blocks),)
        if cfg.kind == "ctgru":
            return (ctgru_step(state[0], u, self.p, dt, self.tau_scales),)
        h = dt / cfg.ode_unfolds
        x = state[0]
        um = self._mapped(u)
        if cfg.kind == "ltc":
            sens = self.syn.sensory(um)
            if cfg.solver == "fused":
                for _ in range(cfg.ode_unfolds):
                    x = self.syn.fused(x, sens, h)
                return (x,)
            f = lambda v: self.syn.rhs(v, sens)  # noqa: E731
        else:
            f = InputDrive(um, self.p, cfg.kind, cfg.activation)
        solve = SOLVER_STEPS[cfg.solver]
        for _ in range(cfg.ode_unfolds):
            x = solve(f, x, h)
        return (x,)

    def visible(self, state: CellState) -> Tensor:
        if self.cfg.kind == "ctgru":
            return nx.reduce_sum(state[0], 1)
        return state[0]

    def readout(self, state: CellState) -> Tensor:
        return nx.add(nx.matmul(self.visible(state), self.p["out_W"]), self.out_b)


def cell_forward(cfg: CellConfig, params: CellParams, state: CellState, u_t: Tensor,
                 dt: float = 1.0) -> tuple[CellState, Tensor]:
    stepper = Stepper(cfg, params, u_t.shape[0])
    new_state = stepper.step(state, u_t, dt)
    return new_state, stepper.readout(new_state)


def sequence_forward(cfg: CellConfig, params: CellParams, inputs, dt: float = 1.0,
                     state: CellState | None = None, return_state: bool = False):
    """Run the cell over inputs [B, T, K] from a zero state; returns outputs [B, T, O]."""
    x = inputs.inputs if hasattr(inputs, "inputs") else inputs
    x = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)
    if x.ndim != 3 or x.shape[2] != cfg.input_size:
        raise nx.ShapeError(f"inputs must be [B, T, {cfg.input_size}], got {x.shape}")
    batch, steps, _ = x.shape
    stepper = Stepper(cfg, params, batch)
    if state is None:
        state = zero_state(cfg, batch)
    outputs = []
    for t in range(steps):
        state = stepper.step(state, Tensor._wrap(x[:, t, :]), dt)
        outputs.append(stepper.readout(state))
    out = nx.stack(outputs, axis=1)
    return (out, state) if return_state else out
