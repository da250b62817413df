import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ltcse import numerics as nx
from ltcse.numerics import Tensor

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


def small(shape):
    return arrays(np.float64, shape, elements=finite)


# ---------------------------------------------------------------- forward values

def test_matmul_identity_and_scalar_cases():
    b = np.arange(9.0).reshape(3, 3)
    assert np.array_equal(nx.matmul(Tensor(np.eye(3)), Tensor(b)).data, b)
    assert nx.matmul(Tensor([[2.0]]), Tensor([[3.0]])).data.tolist() == [[6.0]]


def test_matmul_against_triple_loop(rng):
    a, b = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    ref = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                ref[i, j] += a[i, k] * b[k, j]
    assert np.max(np.abs(nx.matmul(Tensor(a), Tensor(b)).data - ref)) < 1e-12


def test_matmul_shape_error_names_dimensions():
    with pytest.raises(nx.ShapeError, match="3"):
        nx.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))


@settings(max_examples=40, deadline=None)
@given(small((2, 3)), small((3, 4)), small((4, 2)))
def test_matmul_associative(a, b, c):
    A, B, C = Tensor(a), Tensor(b), Tensor(c)
    left = nx.matmul(nx.matmul(A, B), C).data
    right = nx.matmul(A, nx.matmul(B, C)).data
    assert np.allclose(left, right, rtol=1e-10, atol=1e-10)


def test_elementwise_examples():
    assert nx.sigmoid(Tensor(0.0)).item() == 0.5
    assert nx.hard_tanh(Tensor([-2.0, 0.3, 5.0])).data.tolist() == [-1.0, 0.3, 1.0]
    assert nx.elementwise("relu", Tensor([-1.0, 2.0])).data.tolist() == [0.0, 2.0]
    assert nx.elementwise("add", Tensor([1.0]), Tensor([2.0])).data.tolist() == [3.0]
    with pytest.raises(ValueError):
        nx.activation("swish")


def test_reduce_sum_examples():
    assert nx.reduce_sum(Tensor([1.0, 2.0, 3.0])).item() == 6.0
    out = nx.reduce_sum(Tensor(np.zeros((4, 5))), axis=1)
    assert out.shape == (4,) and not out.data.any()


def test_only_scalar_broadcasting():
    a = Tensor(np.ones((2, 3)))
    assert nx.mul(a, 2.0).data.tolist() == [[2.0] * 3] * 2
    with pytest.raises(nx.ShapeError):
        nx.add(a, Tensor(np.ones(3)))
    assert nx.add(a, nx.rows(Tensor(np.ones(3)), 2)).shape == (2, 3)


def test_tensors_are_immutable():
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0


def test_checked_mode_rejects_non_finite():
    with nx.checked(True), pytest.raises(nx.NumericError, match="log"):
        nx.log(Tensor([0.0]))
    with nx.checked(False):
        assert np.isneginf(nx.log(Tensor([0.0])).data[0])


def test_softmax_normalised(rng):
    s = nx.softmax(Tensor(rng.normal(size=(4, 6)) * 50), axis=1).data
    assert np.allclose(s.sum(axis=1), 1.0, atol=1e-12)
    ls = nx.log_softmax(Tensor([[1000.0, 0.0]]), axis=1).data
    assert np.isfinite(ls).all()


# ---------------------------------------------------------------- gradients

def test_backward_linear_and_quadratic():
    w = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    with nx.record() as tape:
        loss = nx.reduce_sum(w)
    assert nx.backward(tape, loss)[w].data.tolist() == [1.0, 1.0, 1.0]
    w = Tensor([1.0, 2.0], requires_grad=True)
    with nx.record() as tape:
        loss = nx.reduce_sum(nx.mul(w, w))
    assert nx.backward(tape, loss)[w].data.tolist() == [2.0, 4.0]


def test_fan_out_gradient_is_sum_of_uses(rng):
    x0 = rng.normal(size=(3,))
    both = nx.value_and_grad(lambda x: nx.reduce_sum(nx.add(nx.tanh(x), nx.square(x))), Tensor(x0))[1][0]
    g1 = nx.value_and_grad(lambda x: nx.reduce_sum(nx.tanh(x)), Tensor(x0))[1][0]
    g2 = nx.value_and_grad(lambda x: nx.reduce_sum(nx.square(x)), Tensor(x0))[1][0]
    assert np.allclose(both, g1 + g2, atol=1e-15)


def test_kink_subgradients_are_zero():
    g = nx.value_and_grad(lambda x: nx.reduce_sum(nx.relu(x)), Tensor([0.0, 1.0]))[1][0]
    assert g.tolist() == [0.0, 1.0]
    g = nx.value_and_grad(lambda x: nx.reduce_sum(nx.hard_tanh(x)), Tensor([-1.0, 0.0, 1.0]))[1][0]
    assert g.tolist() == [0.0, 1.0, 0.0]


def test_unused_wrt_gets_zero_gradient():
    a, b = Tensor([1.0], requires_grad=True), Tensor([2.0], requires_grad=True)
    with nx.record() as tape:
        loss = nx.reduce_sum(a)
    assert nx.backward(tape, loss, wrt=[a, b])[b].data.tolist() == [0.0]


def test_no_record_builds_no_tape():
    w = Tensor([1.0], requires_grad=True)
    with nx.record() as tape:
        with nx.no_record():
            nx.exp(w)
    assert len(tape) == 0


def test_grad_check_trivial_cases():
    assert nx.grad_check(lambda x: nx.reduce_sum(x), Tensor(np.arange(5.0))) < 1e-10
    _, (g,) = nx.value_and_grad(lambda x: nx.reduce_sum(nx.sigmoid(x)), Tensor(np.zeros(3)))
    assert np.allclose(g, 0.25, atol=1e-7)
    assert nx.grad_check(lambda x: nx.reduce_sum(nx.sigmoid(x)), Tensor(np.zeros(3))) < 1e-7


def _positive(x):
    return nx.add(nx.square(x), 0.5)


UNARY = {
    "neg": nx.neg, "exp": nx.exp, "tanh": nx.tanh, "sigmoid": nx.sigmoid, "square": nx.square,
    "log": lambda x: nx.log(_positive(x)),
    "relu": lambda x: nx.relu(nx.add(x, 0.0123)),
    "hard_tanh": lambda x: nx.hard_tanh(nx.mul(x, 0.37)),
    "clamp": lambda x: nx.clamp(x, -0.77, 0.81),
    "softmax": lambda x: nx.softmax(x, axis=1),
    "log_softmax": lambda x: nx.log_softmax(x, axis=0),
    "mean": lambda x: nx.mean(x, axis=1),
    "transpose": nx.transpose,
    "reshape": lambda x: nx.reshape(x, (6,)),
    "broadcast": lambda x: nx.broadcast_to(nx.reshape(x, (2, 1, 3)), (2, 4, 3)),
    "getitem": lambda x: x[1, ::2],
    "fancy": lambda x: nx.getitem(x, (np.array([0, 1, 1]), np.array([2, 0, 2]))),
    "rows": lambda x: nx.rows(nx.reshape(x, (6,)), 3),
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_op_gradients(name):
    op = UNARY[name]
    g = np.random.default_rng(7)
    weights = None
    for _ in range(10):
        x = Tensor(g.uniform(-1.5, 1.5, size=(2, 3)))
        out_shape = op(x).shape
        if weights is None:
            weights = Tensor(g.normal(size=out_shape))
        err = nx.grad_check(lambda t: nx.reduce_sum(nx.mul(op(t), weights)), x)
        assert err < 1e-5, (name, err)


BINARY = {
    "add": nx.add, "sub": nx.sub, "mul": nx.mul,
    "div": lambda a, b: nx.div(a, _positive(b)),
    "matmul": lambda a, b: nx.matmul(a, nx.transpose(b)),
    "concat": lambda a, b: nx.concat([a, b], axis=1),
    "stack": lambda a, b: nx.stack([a, b], axis=0),
    "scalar": lambda a, b: nx.mul(nx.add(a, 2.0), nx.div(1.0, _positive(b))),
}


@pytest.mark.parametrize("name", sorted(BINARY))
def test_binary_op_gradients(name):
    op = BINARY[name]
    g = np.random.default_rng(11)
    for _ in range(10):
        a, b = Tensor(g.normal(size=(2, 3))), Tensor(g.normal(size=(2, 3)))
        w = Tensor(g.normal(size=op(a, b).shape))
        err = nx.grad_check(lambda s, t: nx.reduce_sum(nx.mul(op(s, t), w)), [a, b])
        assert err < 1e-5, (name, err)


@settings(max_examples=25, deadline=None)
@given(small((3, 2)), small((2, 2)))
def test_composite_graph_gradient(x, w):
    def f(a, b):
        h = nx.tanh(nx.matmul(a, b))
        return nx.mean(nx.add(nx.mul(h, h), nx.sigmoid(nx.matmul(h, b))))

    assert nx.grad_check(f, [Tensor(x), Tensor(w)]) < 1e-5


def test_loss_must_be_scalar():
    w = Tensor([1.0, 2.0], requires_grad=True)
    with nx.record() as tape:
        out = nx.mul(w, 2.0)
    with pytest.raises(nx.ShapeError):
        nx.backward(tape, out)
