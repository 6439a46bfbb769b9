"""Seeding helpers.

A seed is either an int or a tuple ``(master, *keys)``.  Tuples map to
``SeedSequence(master, spawn_key=keys)``, which gives independent,
order-free streams per replication so serial and parallel runs agree.
"""

from __future__ import annotations

import numpy as np


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        return np.random.SeedSequence(0)
    if isinstance(seed, (tuple, list)):
        master, *keys = (int(s) for s in seed)
        return np.random.SeedSequence(master, spawn_key=tuple(keys))
    return np.random.SeedSequence(int(seed))


def rng_for(seed) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed))
