from __future__ import annotations

import math
from dataclasses import dataclass

from ..numerics import ACTIVATIONS

KINDS = ("ltc", "ctrnn", "node", "ctgru", "lstm", "gru")
INPUT_MAPPINGS = ("identity", "linear", "affine")
SOLVERS = ("fused", "euler", "rk4")

# kinds integrated by a fixed-step solver with ode_unfolds sub-steps
ODE_KINDS = ("ltc", "ctrnn", "node")

DEFAULT_SOLVER = {"ltc": "fused", "ctrnn": "euler", "node": "rk4",
                  "ctgru": "euler", "lstm": "euler", "gru": "euler"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CellConfig:
    """Architecture of one recurrent cell plus its affine readout.

    ``solver`` defaults per kind (fused for ltc, euler for ctrnn, rk4 for
    node).  ctgru, lstm and gru ignore ``solver`` and ``ode_unfolds``.
    """

    kind: str
    hidden_size: int
    input_size: int
    output_size: int = 1
    input_mapping: str = "affine"
    solver: str | None = None
    ode_unfolds: int = 6
    ctgru_scales: int = 8
    tau_min: float = 1.0
    scale_ratio: float = math.sqrt(10.0)
    activation: str = "tanh"

    def __post_init__(self):
        if self.solver is None and self.kind in DEFAULT_SOLVER:
            object.__setattr__(self, "solver", DEFAULT_SOLVER[self.kind])
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown cell kind {self.kind!r}; expected one of {KINDS}")
        for name in ("hidden_size", "input_size", "output_size", "ode_unfolds", "ctgru_scales"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.input_mapping not in INPUT_MAPPINGS:
            raise ConfigError(f"unknown input_mapping {self.input_mapping!r}; expected one of {INPUT_MAPPINGS}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")
        if self.solver == "fused" and self.kind != "ltc":
            raise ConfigError(f"solver 'fused' is only valid for kind 'ltc', not {self.kind!r}")
        if not self.tau_min > 0:
            raise ConfigError(f"tau_min must be positive, got {self.tau_min!r}")
        if not self.scale_ratio > 1:
            raise ConfigError(f"scale_ratio must exceed 1, got {self.scale_ratio!r}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")

    @property
    def is_ode(self) -> bool:
        return self.kind in ODE_KINDS

    def tau_scales(self) -> list[float]:
        return [self.tau_min * self.scale_ratio ** j for j in range(self.ctgru_scales)]
