import numpy as np
import pytest

from src.utils.random_streams import make_stream, replication_seed, replication_stream


def test_same_keys_same_stream():
    a = make_stream(42, 100, 3).standard_normal(5)
    b = make_stream(42, 100, 3).standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_different_keys_different_streams():
    a = replication_stream(42, 100, 0).standard_normal(5)
    b = replication_stream(42, 100, 1).standard_normal(5)
    c = replication_stream(42, 200, 0).standard_normal(5)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_uses_philox():
    assert isinstance(make_stream(1).bit_generator, np.random.Philox)


def test_replication_seed_is_stable_u64():
    seed = replication_seed(7, 50, 2)
    assert seed == replication_seed(7, 50, 2)
    assert 0 <= seed < 2 ** 64
    assert seed != replication_seed(7, 50, 3)


def test_full_width_master_seed_accepted():
    make_stream(2 ** 64 - 1, 10, 0).random()


def test_seed_required():
    with pytest.raises(ValueError):
        make_stream(None)
