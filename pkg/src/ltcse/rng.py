"""Deterministic random streams keyed by (run seed, label).

Each parameter tensor draws from its own stream, so adding a tensor never
perturbs the draws of existing ones.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def name_hash(label: str) -> int:
    """Stable 64-bit hash of a label (independent of PYTHONHASHSEED)."""
    return int.from_bytes(hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest(), "little")


def stream(seed: int, label: str) -> np.random.Generator:
    entropy = [seed & _MASK64, name_hash(label)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
