import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.simulation.pair_index import (
    directed_pair_arrays,
    directed_pair_index,
    index_to_pair,
    num_pairs,
    pair_arrays,
    pair_to_index,
    pairs_to_indices,
)
from src.utils.errors import InvalidIndexError, InvalidPairError, InvalidSizeError


@pytest.mark.parametrize('n, expected', [(2, 1), (4, 6), (100, 4950)])
def test_num_pairs(n, expected):
    assert num_pairs(n) == expected


@pytest.mark.parametrize('n', [1, 0, -3])
def test_num_pairs_rejects_small_n(n):
    with pytest.raises(InvalidSizeError):
        num_pairs(n)


@pytest.mark.parametrize('pair, expected', [((0, 1), 0), ((1, 2), 3), ((2, 3), 5)])
def test_pair_to_index_n4(pair, expected):
    assert pair_to_index(*pair, 4) == expected


@pytest.mark.parametrize('t, expected', [(0, (0, 1)), (5, (2, 3)), (3, (1, 2))])
def test_index_to_pair_n4(t, expected):
    assert index_to_pair(t, 4) == expected


def test_index_matches_lexicographic_enumeration():
    n = 7
    for t, (i, j) in enumerate(itertools.combinations(range(n), 2)):
        assert pair_to_index(i, j, n) == t
        assert index_to_pair(t, n) == (i, j)


@pytest.mark.parametrize('pair', [(1, 1), (2, 1), (-1, 2), (0, 4)])
def test_pair_to_index_rejects_invalid_pairs(pair):
    with pytest.raises(InvalidPairError):
        pair_to_index(*pair, 4)


@pytest.mark.parametrize('t', [-1, 6, 100])
def test_index_to_pair_rejects_out_of_range(t):
    with pytest.raises(InvalidIndexError):
        index_to_pair(t, 4)


@given(st.integers(min_value=2, max_value=3000), st.data())
def test_index_round_trip(n, data):
    t = data.draw(st.integers(min_value=0, max_value=num_pairs(n) - 1))
    i, j = index_to_pair(t, n)
    assert 0 <= i < j < n
    assert pair_to_index(i, j, n) == t


@given(st.integers(min_value=2, max_value=60))
def test_pair_arrays_follow_index_order(n):
    rows, cols = pair_arrays(n)
    assert rows.size == num_pairs(n)
    np.testing.assert_array_equal(pairs_to_indices(rows, cols, n), np.arange(num_pairs(n)))



def test_pair_arrays_exhaustive_up_to_200():
    for n in range(2, 201):
        rows, cols = pair_arrays(n)
        np.testing.assert_array_equal(pairs_to_indices(rows, cols, n), np.arange(num_pairs(n)))
        assert np.all(rows < cols)


def check_scalar_bijection(n):
    for t in range(num_pairs(n)):
        i, j = index_to_pair(t, n)
        assert 0 <= i < j < n
        assert pair_to_index(i, j, n) == t


def test_scalar_bijection_small_networks():
    for n in range(2, 41):
        check_scalar_bijection(n)


@pytest.mark.slow
def test_scalar_bijection_up_to_200():
    for n in range(41, 201):
        check_scalar_bijection(n)

def test_directed_pair_index_is_row_major():
    n = 4
    rows, cols = directed_pair_arrays(n)
    assert rows.size == n * (n - 1)
    for position, (i, j) in enumerate(zip(rows, cols)):
        assert directed_pair_index(i, j, n) == position


def test_directed_pair_index_n2():
    assert directed_pair_index(0, 1, 2) == 0
    assert directed_pair_index(1, 0, 2) == 1
    with pytest.raises(InvalidPairError):
        directed_pair_index(1, 1, 2)
