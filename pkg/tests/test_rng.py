import numpy as np
import pytest

from wignerlhv.rng import RandomStream


def test_same_address_same_words():
    a = RandomStream(7, 3).bit_generator().random_raw(16)
    b = RandomStream(7, 3).bit_generator().random_raw(16)
    assert np.array_equal(a, b)


def test_frozen_words():
    # golden output of Philox4x64 keyed by SeedSequence(12345, spawn_key=(0,))
    words = RandomStream(12345, 0).bit_generator().random_raw(3)
    assert words.tolist() == [11514036633452313887, 5043530045596984684, 14859261833041187686]


def test_distinct_substreams_differ():
    a = RandomStream(7, 0).bit_generator().random_raw(1000)
    b = RandomStream(7, 1).bit_generator().random_raw(1000)
    c = RandomStream(7, 0).child(0).bit_generator().random_raw(1000)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_substreams_uncorrelated():
    u = RandomStream(99, 0).uniforms(200_000)
    v = RandomStream(99, 1).uniforms(200_000)
    r = np.corrcoef(u, v)[0, 1]
    assert abs(r) < 5 / np.sqrt(200_000)


def test_uniform_range():
    u = RandomStream(1).uniforms(10_000)
    assert u.min() >= 0.0 and u.max() < 1.0


def test_offset_and_child():
    s = RandomStream(5, 2, (1,))
    assert s.offset(3) == RandomStream(5, 5, (1,))
    assert s.child(4) == RandomStream(5, 2, (1, 4))


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        RandomStream(seed)
