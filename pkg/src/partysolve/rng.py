"""Seed derivation.

All randomness flows from numpy's PCG64 generator.  Integer seeds are mixed
through ``SeedSequence`` so child streams (per iteration, offspring, island,
run) are derived from their key path alone, independent of execution order.
"""

import numpy as np

_MASK63 = (1 << 63) - 1


def derive_seed(*keys: int) -> int:
    """Deterministic 63-bit seed from a path of non-negative integer keys."""
    ss = np.random.SeedSequence([int(k) & ((1 << 64) - 1) for k in keys])
    return int(ss.generate_state(1, np.uint64)[0]) & _MASK63


def next_seed(seed: int) -> int:
    """Successor in a seed chain; used to give each restart its own stream."""
    return derive_seed(seed, 0x5EED)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))
