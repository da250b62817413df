"""CT-RNN and neural-ODE right-hand sides.

    ctrnn:  dx/dt = (-x + act(x W_rec + u W_in + bias)) / tau
    node:   dx/dt = act(x W_rec + u W_in + bias)
"""
from __future__ import annotations

from .. import numerics as nx
from ..numerics import Tensor


def drive(x: Tensor, u_mapped: Tensor, p: dict[str, Tensor]) -> Tensor:
    """Pre-activation x W_rec + u W_in + bias."""
    return nx.add(nx.add(nx.matmul(x, p["W_rec"]), nx.matmul(u_mapped, p["W_in"])),
                  nx.rows(p["bias"], x.shape[0]))


def ctrnn_rhs(x: Tensor, u_mapped: Tensor, p: dict[str, Tensor], act: str = "tanh") -> Tensor:
    f = nx.activation(act)(drive(x, u_mapped, p))
    return nx.div(nx.sub(f, x), nx.rows(p["tau"], x.shape[0]))


def node_rhs(x: Tensor, u_mapped: Tensor, p: dict[str, Tensor], act: str = "tanh") -> Tensor:
    return nx.activation(act)(drive(x, u_mapped, p))


class InputDrive:
    """Holds the input part of the drive, fixed across the sub-steps of one sample."""

    def __init__(self, u_mapped: Tensor, p: dict[str, Tensor], kind: str, act: str):
        batch = u_mapped.shape[0]
        self.W_rec = p["W_rec"]
        self.const = nx.add(nx.matmul(u_mapped, p["W_in"]), nx.rows(p["bias"], batch))
        self.act = nx.activation(act)
        self.tau = nx.rows(p["tau"], batch) if kind == "ctrnn" else None

    def __call__(self, x: Tensor) -> Tensor:
        f = self.act(nx.add(nx.matmul(x, self.W_rec), self.const))
        if self.tau is None:
            return f
        return nx.div(nx.sub(f, x), self.tau)
