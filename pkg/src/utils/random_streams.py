# src/utils/random_streams.py

"""
Counter-based random streams.

All sampling goes through ``numpy.random.Generator`` over the Philox
counter-based bit generator. A stream is keyed by a SeedSequence built from a
master seed plus integer keys, so a replication's stream depends only on
``(master_seed, n, rep)`` and never on scheduling or platform.
"""

import numpy as np

SEED_MASK = (1 << 64) - 1


def _seed_sequence(seed, *keys):
    if seed is None:
        raise ValueError("seed is required for a reproducible stream")
    entropy = [int(seed) & SEED_MASK] + [int(k) for k in keys]
    if any(k < 0 for k in entropy):
        raise ValueError("seed and stream keys must be nonnegative integers")
    return np.random.SeedSequence(entropy)


def make_stream(seed, *keys):
    """
    Build an exclusive random stream.

    Parameters:
    -----------
    seed : int
        Unsigned 64-bit master seed
    *keys : int
        Extra nonnegative integers that split the stream

    Returns:
    --------
    numpy.random.Generator backed by Philox
    """
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, *keys)))


def replication_stream(master_seed, n, rep):
    """Stream for replication ``rep`` of network size ``n``."""
    return make_stream(master_seed, n, rep)


def replication_seed(master_seed, n, rep):
    """
    64-bit integer identifying a replication stream (recorded in result rows).
    """
    state = _seed_sequence(master_seed, n, rep).generate_state(1, dtype=np.uint64)
    return int(state[0])
