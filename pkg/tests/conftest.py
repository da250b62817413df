import socket

import numpy as np
import pytest

from ltcse import numerics as nx


@pytest.fixture(autouse=True)
def checked_mode():
    """Scan every op result for NaN/Inf while a test runs."""
    with nx.checked(True):
        yield


@pytest.fixture
def no_network(monkeypatch):
    """Fail loudly on any outgoing connection; yields the list of attempts."""
    attempts = []

    def refuse(self, address, *args, **kwargs):
        attempts.append(address)
        raise AssertionError(f"unexpected network access to {address}")

    def refuse_create(address, *args, **kwargs):
        attempts.append(address)
        raise AssertionError(f"unexpected network access to {address}")

    monkeypatch.setattr(socket.socket, "connect", refuse)
    monkeypatch.setattr(socket, "create_connection", refuse_create)
    yield attempts


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
