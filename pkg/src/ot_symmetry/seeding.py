"""Deterministic splitting of one master seed into independent random streams."""
import numpy as np

REFERENCE = 0
SIGNS = 1
NULL = 2
SCENARIO = 3


def resolve_seed(seed):
    """Return an integer seed; ``None`` draws fresh OS entropy (which is then reported)."""
    if seed is None:
        return int(np.random.SeedSequence().entropy) % (1 << 64)
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return seed


def stream(seed, *key):
    """Generator for the sub-stream ``key`` of ``seed``.

    ``stream(s, SIGNS)`` and ``stream(s, rep, SIGNS)`` are independent of each
    other and of every other key, and do not depend on evaluation order.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))
