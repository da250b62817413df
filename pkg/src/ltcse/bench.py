"""Parameter-count formulas, shape audits, op counts and analytic memory footprints."""
from __future__ import annotations

import csv
import functools
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import numerics as nx
from .cells import CellConfig, CellParams, Stepper, init_params, param_shapes, zero_state

# published reference counts, given only at n=128, k=8 (m=n=128)
TABLE1_DIMS = {"n": 128, "k": 8, "m": 128}
TABLE1_PRINTED = {"ct-rnn": 8320, "ode-rnn": 8192, "lstm": 32896, "ct-gru": 24704, "ltc": 32896}

FORMULA_TEXT = {
    "ct-rnn": "n*k^2 + 2*n*k",
    "ode-rnn": "n*k^2 + n*k",
    "lstm": "4*n*k^2 + 4*n*k",
    "ct-gru": "2*m*k^2 + 2*m*k + k^2 + k",
    "ltc": "4*n*k^2 + 3*n*k",
}

_ALIASES = {"ctrnn": "ct-rnn", "ct-rnn": "ct-rnn", "node": "ode-rnn", "ode-rnn": "ode-rnn",
            "lstm": "lstm", "ctgru": "ct-gru", "ct-gru": "ct-gru", "ltc": "ltc", "ltc-se": "ltc",
            "gru": "gru"}
_CELL_KIND = {"ct-rnn": "ctrnn", "ode-rnn": "node", "lstm": "lstm", "ct-gru": "ctgru", "ltc": "ltc",
              "gru": "gru"}

BENCH_HEADER = ["kind", "n", "k", "m", "formula_count", "table1_printed", "actual_count",
                "flops_per_step", "total_bytes"]

FLOAT_BYTES = 8


def canonical_kind(kind: str) -> str:
    try:
        return _ALIASES[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(_ALIASES)}") from None


def formula_params(kind: str, n: int, k: int, m: int | None = None) -> int:
    kind = canonical_kind(kind)
    if n < 1 or k < 1:
        raise ValueError("n and k must be at least 1")
    if kind == "ct-rnn":
        return n * k * k + 2 * n * k
    if kind == "ode-rnn":
        return n * k * k + n * k
    if kind == "lstm":
        return 4 * n * k * k + 4 * n * k
    if kind == "ltc":
        return 4 * n * k * k + 3 * n * k
    if kind == "ct-gru":
        if m is None:
            raise ValueError("ct-gru needs m")
        if m < 1:
            raise ValueError("m must be at least 1")
        return 2 * m * k * k + 2 * m * k + k * k + k
    raise ValueError(f"no parameter-count formula for {kind!r}")


def table1_printed(kind: str, n: int, k: int, m: int | None = None) -> int | None:
    """The published reference count, only at the dimensions it was given for."""
    kind = canonical_kind(kind)
    if kind not in TABLE1_PRINTED or (n, k) != (TABLE1_DIMS["n"], TABLE1_DIMS["k"]):
        return None
    if kind == "ct-gru" and m != TABLE1_DIMS["m"]:
        return None
    return TABLE1_PRINTED[kind]


def actual_params(cfg: CellConfig, params: CellParams | None = None) -> tuple[int, dict[str, int]]:
    """Total learnable scalars and the per-tensor breakdown (readout included)."""
    if params is None:
        sizes = {name: math.prod(shape) for name, shape in param_shapes(cfg).items()}
    else:
        sizes = {name: t.size for name, t in params.items()}
    return sum(sizes.values()), sizes


@dataclass(frozen=True)
class OpCount:
    macs: int
    adds: int
    activations: int
    elementwise: int

    @property
    def total(self) -> int:
        return self.macs + self.adds + self.activations + self.elementwise

    def __add__(self, other: "OpCount") -> "OpCount":
        return OpCount(self.macs + other.macs, self.adds + other.adds,
                       self.activations + other.activations, self.elementwise + other.elementwise)

    def scale(self, f: int) -> "OpCount":
        return OpCount(self.macs * f, self.adds * f, self.activations * f, self.elementwise * f)


def _rhs_count(cfg: CellConfig) -> OpCount:
    n, k = cfg.hidden_size, cfg.input_size
    if cfg.kind == "ltc":
        # gates sigma*(v - mu) on N^2 + K*N synapses, two weighted reductions each
        syn = n * n + k * n
        return OpCount(2 * syn, 0, syn, 2 * syn + 7 * n)
    base = OpCount(n * n + k * n, 2 * n, n, 0)
    if cfg.kind == "ctrnn":
        return base + OpCount(0, 0, 0, 2 * n)  # -x and /tau
    return base


def step_flops(cfg: CellConfig) -> OpCount:
    """Analytic op count of the cell core for one input sample.

    Input mapping and readout are excluded.  For ltc/ctrnn/node the count is
    the per-sub-step cost times ode_unfolds.
    """
    n, k = cfg.hidden_size, cfg.input_size
    if cfg.kind == "lstm":
        return OpCount(4 * n * (k + n), 4 * n, 5 * n, 4 * n)
    if cfg.kind == "gru":
        return OpCount(3 * n * (k + n), 3 * n, 3 * n, 5 * n)
    if cfg.kind == "ctgru":
        m = cfg.ctgru_scales
        return OpCount(3 * n * (k + n), 3 * n, n + 2 * m * n, 16 * m * n)
    if cfg.kind == "ltc" and cfg.solver == "fused":
        syn = n * n + k * n
        sub = OpCount(2 * syn, 0, syn, 2 * syn + 8 * n)
    elif cfg.solver == "euler":
        sub = _rhs_count(cfg) + OpCount(0, 0, 0, 2 * n)
    else:
        sub = _rhs_count(cfg).scale(4) + OpCount(0, 0, 0, 13 * n)
    return sub.scale(cfg.ode_unfolds)


@functools.lru_cache(maxsize=256)
def saved_floats_per_step(cfg: CellConfig) -> int:
    """Floats recorded for the backward pass by one input step at batch size 1.

    Measured from the shapes of the ops the step appends to a tape.
    """
    params = {k: nx.Tensor(v.data, requires_grad=True) for k, v in init_params(cfg, 0).items()}
    state = tuple(nx.Tensor(s.data, requires_grad=True) for s in zero_state(cfg, 1))
    u = nx.Tensor(np.zeros((1, cfg.input_size)))
    with nx.record() as tape:
        stepper = Stepper(cfg, params, 1)
        before = len(tape)
        new_state = stepper.step(state, u)
        stepper.readout(new_state)
    return sum(node.out.size for node in tape.nodes[before:])


@dataclass(frozen=True)
class FootprintReport:
    kind: str
    config: dict
    batch: int
    steps: int
    param_bytes: int
    optimizer_bytes: int
    activation_bytes: int
    total_bytes: int

    def __post_init__(self):
        if self.total_bytes != self.param_bytes + self.optimizer_bytes + self.activation_bytes:
            raise AssertionError("footprint total does not equal the sum of its parts")


def memory_footprint(cfg: CellConfig, batch: int, T: int) -> FootprintReport:
    """Parameters + two Adam moments + activations kept for one BPTT window (double precision)."""
    if batch < 0 or T < 0:
        raise ValueError("batch and T must be non-negative")
    count, _ = actual_params(cfg)
    p_bytes = count * FLOAT_BYTES
    o_bytes = 2 * count * FLOAT_BYTES
    a_bytes = batch * T * saved_floats_per_step(cfg) * FLOAT_BYTES if batch and T else 0
    return FootprintReport(cfg.kind, asdict(cfg), batch, T, p_bytes, o_bytes, a_bytes,
                           p_bytes + o_bytes + a_bytes)


@dataclass(frozen=True)
class BenchRow:
    kind: str
    n: int
    k: int
    m: int | None
    formula_count: int | None
    table1_printed: int | None
    actual_count: int
    flops_per_step: int
    total_bytes: int

    @property
    def discrepancy(self) -> bool:
        """True when the reference count differs from the formula evaluation."""
        return (self.table1_printed is not None and self.formula_count is not None
                and self.table1_printed != self.formula_count)

    def cells(self) -> list[str]:
        return ["" if v is None else str(v) for v in (
            self.kind, self.n, self.k, self.m, self.formula_count, self.table1_printed,
            self.actual_count, self.flops_per_step, self.total_bytes)]


def bench_row(kind: str, n: int, k: int, m: int | None = None, batch: int = 16, T: int = 32,
              output_size: int = 1, ode_unfolds: int = 6) -> BenchRow:
    """n = hidden units, k = input features; m = CT-GRU trace count."""
    kind = canonical_kind(kind)
    if kind == "ct-gru" and m is None:
        raise ValueError("ct-gru needs m")
    cell_kind = _CELL_KIND[kind]
    extra = {"ctgru_scales": m} if kind == "ct-gru" else {}
    cfg = CellConfig(cell_kind, n, k, output_size=output_size, ode_unfolds=ode_unfolds, **extra)
    formula = formula_params(kind, n, k, m) if kind in FORMULA_TEXT else None
    return BenchRow(kind, n, k, m if kind == "ct-gru" else None, formula, table1_printed(kind, n, k, m),
                    actual_params(cfg)[0], step_flops(cfg).total, memory_footprint(cfg, batch, T).total_bytes)


def table1_report() -> list[BenchRow]:
    d = TABLE1_DIMS
    return [bench_row(kind, d["n"], d["k"], d["m"] if kind == "ct-gru" else None) for kind in TABLE1_PRINTED]


def format_bench_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()
