"""Deterministic random streams.

All randomness in the package flows through NumPy's PCG64 generator, keyed
by a 64-bit seed plus a spawn path. The same (seed, path) always yields the
same stream, so every decode and every harness run is replayable.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Spawn-path domains; keeps mask selection and sampling streams independent.
DOMAIN_MASK = 1
DOMAIN_SAMPLE = 2
DOMAIN_SERVER = 3


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """PCG64 stream for the given seed and spawn path."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, key: str) -> int:
    """Stable 64-bit seed for a named sub-task (e.g. one dataset example).

    Uses SHA-256 so shard-parallel runs reproduce serial runs regardless of
    example order.
    """
    digest = hashlib.sha256(f"{seed}:{key}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
