"""Adam, losses and the truncated-BPTT training protocol."""
from .adam import AdamState, adam_step
from .losses import cross_entropy, higher_is_better, loss, metric, squared_error
from .trainer import (LR_RANGE, RunRecord, TrainConfig, evaluate, minibatches, repeat_runs, run,
                      summarize, train_epoch)

__all__ = [
    "AdamState", "adam_step", "loss", "metric", "cross_entropy", "squared_error", "higher_is_better",
    "TrainConfig", "RunRecord", "LR_RANGE", "train_epoch", "evaluate", "run", "repeat_runs",
    "summarize", "minibatches",
]
