"""Deterministic RNG stream derivation.

Every random draw in the package comes from a generator keyed by a seed plus
a structured spawn key, so results never depend on scheduling or evaluation
order: a (seed, key) pair always yields the same stream, and distinct keys
yield independent streams.
"""

from __future__ import annotations

import numpy as np

# Spawn-key domains. Keep the values stable: emitted artifacts depend on them.
DOMAIN_ORACLE = 0
DOMAIN_ATTACK = 1
DOMAIN_SAMPLER = 2
DOMAIN_PROBES = 3
DOMAIN_DATA = 4
DOMAIN_SWEEP = 5


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for (seed, key). Identical arguments, identical stream."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def derive_seed(seed: int, *key: int) -> int:
    """Stable non-negative 63-bit child seed for (seed, key)."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
