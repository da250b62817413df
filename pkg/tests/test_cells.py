import math

import numpy as np
import pytest
from helpers import GRAD_VARIANTS, cell_grad_error
from hypothesis import given, settings
from hypothesis import strategies as st

from ltcse import numerics as nx
from ltcse.cells import (CellConfig, ConfigError, cell_forward, check_constraints, constrain_params,
                         ctgru_step, ctrnn_rhs, euler_step, gru_step, init_cell, init_params,
                         lstm_step, ltc_fused_step, ltc_rhs, map_input, node_rhs, param_shapes,
                         reversal_hull, rk4_step, scale_attention, sequence_forward, synapse_gate,
                         trace_decay, zero_state)
from ltcse.numerics import Tensor


def T(x):
    return Tensor(np.asarray(x, dtype=float))


def ltc_params(n=1, k=1, **over):
    base = dict(gleak=np.ones(n), vleak=np.zeros(n), cm=np.ones(n),
                W=np.zeros((n, n)), erev=np.ones((n, n)), mu=np.zeros((n, n)), sigma=np.ones((n, n)),
                sensory_W=np.zeros((k, n)), sensory_erev=np.ones((k, n)),
                sensory_mu=np.zeros((k, n)), sensory_sigma=np.ones((k, n)))
    base.update({key: np.asarray(v, dtype=float) for key, v in over.items()})
    return {key: T(v) for key, v in base.items()}


# ---------------------------------------------------------------- config

def test_config_rejects_illegal_pairs():
    with pytest.raises(ConfigError, match="fused.*ctrnn"):
        CellConfig("ctrnn", 4, 2, solver="fused")
    with pytest.raises(ConfigError, match="hidden_size"):
        CellConfig("ltc", 0, 2)
    with pytest.raises(ConfigError):
        CellConfig("transformer", 4, 2)


def test_default_solvers():
    assert CellConfig("ltc", 2, 1).solver == "fused"
    assert CellConfig("ctrnn", 2, 1).solver == "euler"
    assert CellConfig("node", 2, 1).solver == "rk4"


# ---------------------------------------------------------------- init

def test_init_is_deterministic():
    cfg = CellConfig("ltc", 8, 4)
    a, b = init_params(cfg, 42), init_params(cfg, 42)
    assert all(np.array_equal(a[k].data, b[k].data) for k in a)
    c = init_params(cfg, 43)
    assert not np.array_equal(a["W"].data, c["W"].data)


def test_ltc_init_ranges():
    p, state = init_cell(CellConfig("ltc", 8, 4), 0)
    assert (p["W"].data >= 0.001).all() and (p["sensory_W"].data >= 0.001).all()
    assert ((p["sigma"].data >= 3) & (p["sigma"].data <= 8)).all()
    assert ((p["cm"].data >= 0.4) & (p["cm"].data <= 0.6)).all()
    assert set(np.unique(p["erev"].data)) <= {-1.0, 1.0}
    assert state[0].shape == (1, 8) and not state[0].data.any()


def test_lstm_tensor_audit():
    shapes = param_shapes(CellConfig("lstm", 8, 4))
    assert shapes["W"] == (12, 32) and shapes["bias"] == (32,)
    # gate weights, gate bias, and the readout group
    assert set(shapes) == {"W", "bias", "out_W", "out_b"}


def test_zero_state_shapes():
    assert [s.shape for s in zero_state(CellConfig("lstm", 3, 2), 4)] == [(4, 3), (4, 3)]
    assert zero_state(CellConfig("ctgru", 3, 2, ctgru_scales=5), 4)[0].shape == (4, 5, 3)


# ---------------------------------------------------------------- input mapping and gates

def test_map_input_examples():
    u = T([[1.0, -3.0]])
    assert map_input(u, "identity") is u
    assert map_input(u, "linear", T([2.0, 2.0])).data.tolist() == [[2.0, -6.0]]
    out = map_input(T([[0.0, 1.0]]), "affine", T([1.0, 1.0]), T([0.5, 0.5]))
    assert out.data.tolist() == [[0.5, 1.5]]


def test_synapse_gate_examples():
    assert synapse_gate(T(0.3), T(0.3), T(5.0)).item() == 0.5
    assert synapse_gate(T(0.0), T(0.0), T(4.0)).item() == 0.5
    assert synapse_gate(T(0.5), T(0.0), T(4.0)).item() == pytest.approx(1 / (1 + math.exp(-2)), abs=1e-12)
    sigma = 4.0
    assert synapse_gate(T(0.3 + 100 / sigma), T(0.3), T(sigma)).item() > 1 - 1e-10


# ---------------------------------------------------------------- LTC

def test_fused_leak_only():
    p = ltc_params()
    assert ltc_fused_step(T([[1.0]]), T([[0.0]]), p, 1.0).item() == 0.5


def test_fused_single_synapse():
    # input has no effect since sensory_W = 0
    p = ltc_params(W=[[1.0]], erev=[[1.0]], mu=[[0.0]], sigma=[[7.0]])
    out = ltc_fused_step(T([[0.0]]), T([[0.0]]), p, 0.1).item()
    assert out == pytest.approx(0.5 / 11.5, abs=1e-12)


def test_rhs_examples():
    p = ltc_params(vleak=[0.3])
    assert ltc_rhs(T([[0.3]]), T([[0.0]]), p).item() == 0.0
    assert ltc_rhs(T([[1.0]]), T([[0.0]]), ltc_params()).item() == -1.0


def random_ltc(g, n, k, batch):
    p = {
        "gleak": T(g.uniform(1e-5, 3, n)), "vleak": T(g.uniform(-2, 2, n)), "cm": T(g.uniform(1e-3, 3, n)),
        "W": T(g.uniform(0, 3, (n, n))), "erev": T(g.uniform(-2, 2, (n, n))),
        "mu": T(g.uniform(-1, 1, (n, n))), "sigma": T(g.uniform(1e-3, 10, (n, n))),
        "sensory_W": T(g.uniform(0, 3, (k, n))), "sensory_erev": T(g.uniform(-2, 2, (k, n))),
        "sensory_mu": T(g.uniform(-1, 1, (k, n))), "sensory_sigma": T(g.uniform(1e-3, 10, (k, n))),
    }
    return p, g.uniform(-3, 3, (batch, n)), g.normal(scale=3, size=(batch, k))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 3),
       st.floats(1e-4, 10.0))
def test_fused_step_stays_in_hull(seed, n, k, h):
    p, v, u = random_ltc(np.random.default_rng(seed), n, k, 3)
    out = ltc_fused_step(T(v), T(u), p, h).data
    lo, hi = reversal_hull(v, p)
    assert (out >= lo).all() and (out <= hi).all()


def test_fused_matches_fine_euler():
    g = np.random.default_rng(3)
    p, v0, u = random_ltc(g, 3, 2, 1)
    fused, fine = T(v0), T(v0)
    for _ in range(10_000):
        fused = ltc_fused_step(fused, T(u), p, 1e-4)
        fine = euler_step(lambda v: ltc_rhs(v, T(u), p), fine, 1e-4)
    assert np.max(np.abs(fused.data - fine.data)) < 1e-3


def test_fused_order_on_leak_only_system():
    p = ltc_params(gleak=[1.0], vleak=[0.0], cm=[1.0])
    errs = []
    hs = [0.1, 0.05, 0.025]
    for h in hs:
        v = T([[1.0]])
        for _ in range(round(1 / h)):
            v = ltc_fused_step(v, T([[0.0]]), p, h)
        errs.append(abs(v.item() - math.exp(-1)))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert slope >= 0.95


def test_constrain_params_restores_positivity():
    cfg = CellConfig("ltc", 3, 2)
    p = dict(init_params(cfg, 0))
    p["W"] = T(-np.ones((3, 3)))
    p["cm"] = T(np.zeros(3))
    assert set(check_constraints(cfg, p)) == {"W", "cm"}
    assert check_constraints(cfg, constrain_params(cfg, p)) == []


# ---------------------------------------------------------------- explicit solvers

def test_solver_examples():
    f = lambda x: nx.neg(x)  # noqa: E731
    assert euler_step(f, T([1.0]), 0.1).item() == pytest.approx(0.9, abs=1e-15)
    assert rk4_step(f, T([1.0]), 0.1).item() == pytest.approx(0.9048375, abs=1e-7)
    zero = lambda x: nx.mul(x, 0.0)  # noqa: E731
    assert euler_step(zero, T([2.5]), 0.3).item() == 2.5
    assert rk4_step(zero, T([2.5]), 0.3).item() == 2.5


def test_cell_forward_euler_power():
    # ctrnn with zero weights and tau = 1 gives dx/dt = -x
    cfg = CellConfig("ctrnn", 1, 1, ode_unfolds=6, input_mapping="identity")
    p = {k: T(np.zeros(v.shape)) for k, v in init_params(cfg, 0).items()}
    p["tau"] = T([1.0])
    (x,), _ = cell_forward(cfg, p, (T([[1.0]]),), T([[0.0]]), dt=0.6)
    assert x.item() == pytest.approx(0.531441, abs=1e-12)


def test_ctrnn_and_node_rhs():
    n = 3
    zeros = {"W_rec": T(np.zeros((n, n))), "W_in": T(np.zeros((1, n))), "bias": T(np.zeros(n)),
             "tau": T(np.ones(n))}
    x = T([[0.4, -1.0, 2.0]])
    u = T([[0.7]])
    assert np.array_equal(ctrnn_rhs(x, u, zeros).data, -x.data)
    assert not node_rhs(x, u, zeros).data.any()
    b = dict(zeros, bias=T([0.3, -0.2, 1.0]), tau=T([2.0, 2.0, 2.0]))
    assert np.allclose(ctrnn_rhs(T(np.zeros((1, n))), T([[0.0]]), b).data, np.tanh([0.3, -0.2, 1.0]) / 2)
    g = np.random.default_rng(0)
    rand = {"W_rec": T(g.normal(size=(n, n))), "W_in": T(g.normal(size=(1, n))),
            "bias": T(g.normal(size=n)), "tau": T(np.ones(n))}
    assert np.allclose(ctrnn_rhs(x, u, rand).data, node_rhs(x, u, rand).data - x.data, atol=1e-15)


# ---------------------------------------------------------------- CT-GRU

def test_trace_decay_one_time_constant():
    out = trace_decay(T(np.ones((1, 1, 1))), 2.0, [2.0])
    assert out.item() == pytest.approx(math.exp(-1), abs=1e-15)


def test_single_scale_attention_is_one():
    w = scale_attention(T(np.random.default_rng(0).normal(size=(2, 3))), np.log([5.0]))
    assert np.array_equal(w.data, np.ones((2, 1, 3)))


def _ctgru_params(g, n, k):
    return {name: T(g.normal(size=shape)) for name, shape in
            [("W_r", (k + n, n)), ("b_r", (n,)), ("W_s", (k + n, n)), ("b_s", (n,)),
             ("W_q", (k + n, n)), ("b_q", (n,))]}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_ctgru_attention_normalised(seed):
    g = np.random.default_rng(seed)
    scales = np.log(CellConfig("ctgru", 4, 2).tau_scales())
    w = scale_attention(T(g.normal(scale=5, size=(3, 4))), scales).data
    assert np.max(np.abs(w.sum(axis=1) - 1)) < 1e-12


def test_ctgru_free_decay():
    g = np.random.default_rng(5)
    cfg = CellConfig("ctgru", 4, 2)
    p = _ctgru_params(g, 4, 2)
    p["W_q"], p["b_q"] = T(np.zeros((6, 4))), T(np.zeros(4))
    hhat = g.normal(size=(2, 8, 4))
    out = ctgru_step(T(hhat), T(g.normal(size=(2, 2))), p, 0.7, cfg.tau_scales(), force_storage=0.0).data
    expected = hhat * np.exp(-0.7 / np.array(cfg.tau_scales())).reshape(1, 8, 1)
    assert np.max(np.abs(out - expected)) < 1e-12


# ---------------------------------------------------------------- gated baselines

def test_lstm_zero_weights():
    p = {"W": T(np.zeros((3, 8))), "bias": T(np.zeros(8))}
    h, c = lstm_step((T(np.zeros((1, 2))), T(np.zeros((1, 2)))), T([[1.0]]), p)
    assert not h.data.any() and not c.data.any()
    _, c = lstm_step((T(np.zeros((1, 2))), T(np.full((1, 2), 2.0))), T([[1.0]]), p)
    assert c.data.tolist() == [[1.0, 1.0]]


def test_gru_zero_weights():
    p = {"W": T(np.zeros((3, 6))), "bias": T(np.zeros(6))}
    h = gru_step(T(np.full((1, 2), 4.0)), T([[1.0]]), p)
    assert h.data.tolist() == [[2.0, 2.0]]


# ---------------------------------------------------------------- sequences

@pytest.mark.parametrize("kind", ["ltc", "ctrnn", "node", "ctgru", "lstm", "gru"])
def test_sequence_shapes_and_determinism(kind):
    cfg = CellConfig(kind, 5, 3, output_size=2)
    p = init_params(cfg, 9)
    x = np.random.default_rng(1).normal(size=(4, 6, 3))
    a = sequence_forward(cfg, p, x)
    b = sequence_forward(cfg, init_params(cfg, 9), x)
    assert a.shape == (4, 6, 2)
    assert np.array_equal(a.data, b.data)


def test_zero_readout_gives_bias():
    cfg = CellConfig("ltc", 3, 2, output_size=2)
    p = dict(init_params(cfg, 0))
    p["out_W"] = T(np.zeros((3, 2)))
    p["out_b"] = T([0.25, -1.5])
    out = sequence_forward(cfg, p, np.ones((2, 4, 2))).data
    assert (out == np.array([0.25, -1.5])).all()


def test_sequence_rejects_wrong_width():
    cfg = CellConfig("gru", 3, 2)
    with pytest.raises(nx.ShapeError):
        sequence_forward(cfg, init_params(cfg, 0), np.ones((1, 4, 5)))


@pytest.mark.parametrize("label,kind,solver", GRAD_VARIANTS)
def test_unrolled_gradients(label, kind, solver):
    assert cell_grad_error(kind, solver, seed=100, n=3, k=2, T=3, batch=2) < 1e-5
