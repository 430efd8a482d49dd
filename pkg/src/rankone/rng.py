"""Deterministic random streams.

Every stream is a PCG64 generator seeded from ``(master_seed, *keys)``, so a
replica's stream depends only on its coordinates; extending a grid never
perturbs the earlier cells.
"""

import zlib

import numpy as np


def _as_key(k):
    if isinstance(k, str):
        return zlib.crc32(k.encode())
    k = int(k)
    if k < 0:
        raise ValueError(f"stream keys must be nonnegative, got {k}")
    return k


def derive_stream(master_seed, *keys) -> np.random.Generator:
    entropy = [_as_key(master_seed)] + [_as_key(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
