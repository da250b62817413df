"""Shared fixtures for cell-level checks."""
import numpy as np

from ltcse import numerics as nx
from ltcse.cells import CellConfig, init_params, sequence_forward

# (label, kind, solver) for every cell variant that must pass the gradient check
GRAD_VARIANTS = [
    ("ltc-fused", "ltc", "fused"),
    ("ltc-euler", "ltc", "euler"),
    ("ctrnn", "ctrnn", "euler"),
    ("node", "node", "rk4"),
    ("ctgru", "ctgru", None),
    ("lstm", "lstm", None),
    ("gru", "gru", None),
]


def random_instance(kind, solver, seed, n=4, k=3, T=3, batch=2, out=2, unfolds=6):
    g = np.random.default_rng(seed)
    extra = {"solver": solver} if solver else {}
    if kind == "ctgru":
        extra["ctgru_scales"] = 3
    cfg = CellConfig(kind, n, k, output_size=out, ode_unfolds=unfolds, **extra)
    params = init_params(cfg, seed)
    # move off the init values so biases and mappings are exercised
    jitter = {}
    for name, t in params.items():
        bump = g.normal(scale=0.1, size=t.shape)
        data = t.data + bump
        if name in ("W", "sensory_W") and kind == "ltc":
            data = np.abs(data)
        if name in ("tau", "cm", "gleak", "sigma", "sensory_sigma"):
            data = np.abs(data) + 0.2
        jitter[name] = nx.Tensor(data)
    x = g.normal(size=(batch, T, k))
    w = nx.Tensor(g.normal(size=(batch, T, out)))
    return cfg, jitter, x, w


def cell_grad_error(kind, solver, seed, **dims):
    cfg, params, x, w = random_instance(kind, solver, seed, **dims)
    names = sorted(params)

    def f(*tensors):
        p = dict(zip(names, tensors))
        return nx.reduce_sum(nx.mul(sequence_forward(cfg, p, x), w))

    return nx.grad_check(f, [params[k] for k in names], step=1e-5)
