"""Seeded random streams.

Every stochastic draw in the package goes through :func:`make_rng`, which
keys a counter-based Philox generator on ``(seed, *keys)``.  String keys are
hashed with CRC-32 so that a stream depends on an identity (run id, group
id), never on the position of a loop variable.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    return int(k)


def make_rng(seed: int, *keys) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(_key(k) for k in keys)])
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *keys) -> int:
    """A child integer seed, stable for a given ``(seed, *keys)``."""
    return int(make_rng(seed, *keys).integers(0, 2**31 - 1))
