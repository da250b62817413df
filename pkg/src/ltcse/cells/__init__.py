"""Continuous-time cells (LTC, CT-RNN, neural ODE, CT-GRU) and LSTM/GRU baselines."""
from .config import DEFAULT_SOLVER, INPUT_MAPPINGS, KINDS, ODE_KINDS, SOLVERS, CellConfig, ConfigError
from .ctgru import ctgru_step, scale_attention, trace_decay
from .ctrnn import ctrnn_rhs, node_rhs
from .forward import Stepper, cell_forward, sequence_forward
from .gated import gru_step, lstm_step
from .ltc import ltc_fused_step, ltc_rhs, map_input, reversal_hull, synapse_gate
from .params import (CellParams, CellState, check_constraints, constrain_params, init_cell,
                     init_params, param_shapes, zero_state)
from .solvers import euler_step, rk4_step

__all__ = [
    "CellConfig", "ConfigError", "KINDS", "ODE_KINDS", "SOLVERS", "INPUT_MAPPINGS", "DEFAULT_SOLVER",
    "CellParams", "CellState", "Stepper", "cell_forward", "sequence_forward",
    "init_cell", "init_params", "zero_state", "param_shapes", "constrain_params", "check_constraints",
    "map_input", "synapse_gate", "ltc_fused_step", "ltc_rhs", "reversal_hull",
    "ctrnn_rhs", "node_rhs", "ctgru_step", "trace_decay", "scale_attention",
    "lstm_step", "gru_step", "euler_step", "rk4_step",
]
