# src/simulation/pair_index.py

"""
Lexicographic indexing of unordered node pairs.

Nodes and pair indices are 0-based. For nodes i < j on n nodes the pair index is

    t = i*n - i*(i+1)/2 + (j - i - 1)

which is the 1-based textbook formula [(n-1) + ... + (n-(i-1))] + j - i minus
one, after relabeling node i as i+1. The same index addresses both axes of the
latent covariance matrix.
"""

import numpy as np

from src.utils.errors import InvalidIndexError, InvalidPairError, InvalidSizeError


def num_pairs(n):
    """
    Number of unordered pairs N = n(n-1)/2.

    Parameters:
    -----------
    n : int
        Number of nodes, at least 2

    Returns:
    --------
    int
    """
    n = int(n)
    if n < 2:
        raise InvalidSizeError(f"need at least 2 nodes, got n={n}", n=n)
    return n * (n - 1) // 2


def pair_to_index(i, j, n):
    """
    Linear index of the pair (i, j), i < j.

    Parameters:
    -----------
    i, j : int
        Node ids with 0 <= i < j < n
    n : int
        Number of nodes

    Returns:
    --------
    int in [0, N)
    """
    i, j, n = int(i), int(j), int(n)
    if i < 0 or j >= n or i >= j:
        raise InvalidPairError(f"invalid pair ({i}, {j}) for n={n}", i=i, j=j, n=n)
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def index_to_pair(t, n):
    """
    Inverse of pair_to_index.

    Parameters:
    -----------
    t : int
        Pair index, 0 <= t < N
    n : int
        Number of nodes

    Returns:
    --------
    tuple (i, j) with i < j
    """
    t, n = int(t), int(n)
    total = num_pairs(n)
    if t < 0 or t >= total:
        raise InvalidIndexError(f"pair index {t} out of range [0, {total})", t=t, n=n)
    # row i starts at offset i*n - i*(i+1)/2; solve the quadratic and fix rounding
    i = int((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * t)) // 2)
    while i > 0 and _row_start(i, n) > t:
        i -= 1
    while _row_start(i + 1, n) <= t:
        i += 1
    j = t - _row_start(i, n) + i + 1
    return i, j


def _row_start(i, n):
    return i * n - i * (i + 1) // 2


def pair_arrays(n):
    """
    Node arrays of every pair in index order.

    Returns:
    --------
    (rows, cols) : tuple of int arrays of length N, rows[t] < cols[t]
    """
    rows, cols = np.triu_indices(int(n), k=1)
    return rows, cols


def pairs_to_indices(rows, cols, n):
    """Vectorized pair_to_index for arrays of valid pairs (no checking)."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    return rows * n - rows * (rows + 1) // 2 + (cols - rows - 1)


def directed_pair_index(i, j, n):
    """
    Row-major index of the ordered pair (i, j), i != j, skipping the diagonal.

    Used for the n(n-1)-dimensional latent vector of directed graphs.
    """
    i, j, n = int(i), int(j), int(n)
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise InvalidPairError(f"invalid ordered pair ({i}, {j}) for n={n}", i=i, j=j, n=n)
    return i * (n - 1) + (j if j < i else j - 1)


def directed_pair_arrays(n):
    """Ordered pairs (i, j), i != j, in row-major order."""
    n = int(n)
    rows, cols = np.nonzero(~np.eye(n, dtype=bool))
    return rows, cols
