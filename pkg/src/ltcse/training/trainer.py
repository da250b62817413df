"""Truncated-BPTT training loop, evaluation and multi-seed repetition."""
from __future__ import annotations

import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import numerics as nx
from .. import rng
from ..cells import CellConfig, CellParams, constrain_params, init_params, sequence_forward
from ..cells.config import ConfigError
from ..data.table import SequenceBatch, TaskData
from .adam import AdamState, adam_step
from .losses import higher_is_better, loss, metric

log = logging.getLogger(__name__)

LR_RANGE = (0.001, 0.01)
TEST_WEIGHTS = ("best-valid", "final")


@dataclass(frozen=True)
class TrainConfig:
    hidden_units: int = 32
    minibatch: int = 16
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    bptt_len: int = 32
    epochs: int = 100
    eval_every: int = 1
    repeats: int = 5
    seed: int = 0
    test_weights: str = "best-valid"
    lr_override: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("hidden_units", "minibatch", "bptt_len", "eval_every", "repeats"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if isinstance(self.epochs, bool) or not isinstance(self.epochs, int) or self.epochs < 0:
            raise ConfigError(f"epochs must be a non-negative integer, got {self.epochs!r}")
        if not self.lr_override and not LR_RANGE[0] <= self.learning_rate <= LR_RANGE[1]:
            raise ConfigError(f"learning_rate {self.learning_rate} is outside {LR_RANGE}; "
                              "set lr_override to use it anyway")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.adam_epsilon > 0):
            raise ConfigError("Adam betas must lie in [0, 1) and epsilon must be positive")
        if self.test_weights not in TEST_WEIGHTS:
            raise ConfigError(f"test_weights must be one of {TEST_WEIGHTS}, got {self.test_weights!r}")


@dataclass
class RunRecord:
    seed: int
    task: str
    model: str
    metric: str
    train_loss: list[float] = field(default_factory=list)
    valid_metric: list[float] = field(default_factory=list)
    test_metric: float = math.nan
    wall_seconds: float = 0.0
    epoch_of_best_valid: int = 0

    @property
    def epochs(self) -> list[tuple[float, float]]:
        return list(zip(self.train_loss, self.valid_metric))


def evaluate(cfg: CellConfig, params: CellParams, data: SequenceBatch, chunk: int = 256) -> float:
    if len(data) == 0:
        return math.nan
    outs = []
    with nx.no_record():
        for s in range(0, len(data), chunk):
            outs.append(sequence_forward(cfg, params, data.inputs[s:s + chunk]).data)
    return metric(np.concatenate(outs), data.targets, data.kind)


def minibatches(n: int, size: int, seed: int, epoch: int) -> list[np.ndarray]:
    order = rng.stream(seed, f"shuffle/{epoch}").permutation(n)
    return [order[s:s + size] for s in range(0, n, size)]


def train_epoch(cfg: CellConfig, params: CellParams, data: SequenceBatch, opt: AdamState,
                tcfg: TrainConfig, seed: int = 0, epoch: int = 0) -> tuple[float, CellParams, AdamState]:
    """One pass over the shuffled windows; each window starts from the zero state."""
    if data.inputs.shape[1] != tcfg.bptt_len:
        raise ValueError(f"windows have length {data.inputs.shape[1]}, expected bptt_len {tcfg.bptt_len}")
    names = list(params)
    losses, weights = [], []
    for idx in minibatches(len(data), tcfg.minibatch, seed, epoch):
        leaves = {k: nx.Tensor(params[k].data, requires_grad=True) for k in names}
        with nx.record() as tape:
            value = loss(sequence_forward(cfg, leaves, data.inputs[idx]), data.targets[idx], data.kind)
        if not np.isfinite(value.item()):
            raise nx.NumericError(f"non-finite loss on windows {idx.tolist()} in epoch {epoch}")
        grads = nx.backward(tape, value, wrt=leaves.values())
        params, opt = adam_step(params, {k: grads[leaves[k]].data for k in names}, opt,
                                tcfg.learning_rate, tcfg.beta1, tcfg.beta2, tcfg.adam_epsilon)
        params = constrain_params(cfg, params)
        losses.append(value.item())
        weights.append(len(idx))
    train_loss = float(np.dot(losses, weights) / np.sum(weights)) if losses else math.nan
    return train_loss, params, opt


def run(data: TaskData, cfg: CellConfig, tcfg: TrainConfig, seed: int,
        test_weights: str | None = None, init: CellParams | None = None) -> tuple[RunRecord, CellParams]:
    """Train for tcfg.epochs and score the test split once.

    Returns the record and the parameters the test metric was computed with.
    """
    test_weights = test_weights or tcfg.test_weights
    kind = data.train.kind
    record = RunRecord(seed, data.spec.name, cfg.kind, data.spec.metric)
    start = time.perf_counter()
    params = init if init is not None else init_params(cfg, seed)
    opt = AdamState.zeros_like(params)
    better = (lambda a, b: a > b) if higher_is_better(kind) else (lambda a, b: a < b)
    best_params, best_value = params, None
    for epoch in range(1, tcfg.epochs + 1):
        train_loss, params, opt = train_epoch(cfg, params, data.train, opt, tcfg, seed, epoch)
        valid = math.nan
        if epoch % tcfg.eval_every == 0:
            valid = evaluate(cfg, params, data.valid)
            if best_value is None or better(valid, best_value):
                best_value, best_params = valid, params
                record.epoch_of_best_valid = epoch
        record.train_loss.append(train_loss)
        record.valid_metric.append(valid)
        log.info("seed %d epoch %d loss %.6f valid %s %.4f", seed, epoch, train_loss, data.spec.metric, valid)
    final = best_params if test_weights == "best-valid" else params
    if test_weights == "final":
        record.epoch_of_best_valid = tcfg.epochs if tcfg.epochs else 0
    record.test_metric = evaluate(cfg, final, data.test)
    record.wall_seconds = time.perf_counter() - start
    return record, final


def _run_job(args):
    data, cfg, tcfg, seed = args
    return run(data, cfg, tcfg, seed)


def summarize(values: list[float]) -> tuple[float, float]:
    """Mean and sample (n-1) standard deviation."""
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, std


def repeat_runs(data: TaskData, cfg: CellConfig, tcfg: TrainConfig,
                jobs: int = 1) -> tuple[list[tuple[RunRecord, CellParams]], dict[str, tuple[float, float]]]:
    """Run seeds seed..seed+repeats-1; results are ordered by seed."""
    seeds = [tcfg.seed + i for i in range(tcfg.repeats)]
    jobs_args = [(data, cfg, tcfg, s) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, jobs_args))
    else:
        results = [_run_job(a) for a in jobs_args]
    summary = {data.spec.metric: summarize([r.test_metric for r, _ in results])}
    return results, summary
