"""Deterministic random-stream construction.

All randomness flows through numpy's Philox bit generator, a counter-based
64-bit generator whose output for a fixed seed is pinned by numpy's stream
compatibility policy.  Replication ``r`` of an experiment with master seed
``s`` uses the stream keyed by ``SeedSequence(s, spawn_key=(r,))``, so
replications are independent and may run in any order (or in parallel)
without changing a single drawn number.
"""

from __future__ import annotations

import numpy as np

from .validation import check_seed

BIT_GENERATOR = "Philox"


def make_generator(seed) -> np.random.Generator:
    """Fresh generator for a nonnegative integer seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(check_seed(seed))))


def spawn_seed(master_seed, index) -> int:
    """Integer seed of child stream `index` derived from `master_seed`."""
    ss = np.random.SeedSequence(check_seed(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])
