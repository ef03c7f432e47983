"""Deterministic random streams.

Every source of randomness in a run derives from a single 64-bit seed plus a
site name, so adding or reordering noise sites never perturbs the streams of
the existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, site: str) -> np.random.Generator:
    """Generator for one named noise site under a run seed.

    The same (seed, site) pair always yields the same stream, independently
    of any other site.
    """
    key = zlib.crc32(site.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), key]))


def as_generator(rng) -> np.random.Generator:
    """Accept either an integer seed or an existing Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(int(rng))
