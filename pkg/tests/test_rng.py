import hashlib

import pytest
from hypothesis import given
from hypothesis import strategies as st

from asrnoise import rng


def test_matches_direct_blake2b():
    h = hashlib.blake2b(key=(7).to_bytes(8, "little"), digest_size=8)
    h.update((3).to_bytes(4, "little") + b"d01" + (2).to_bytes(8, "little", signed=True))
    h.update((5).to_bytes(8, "little", signed=True) + (1).to_bytes(4, "little"))
    assert rng.u64(7, "d01", 2, 5, 1) == int.from_bytes(h.digest(), "little")


@given(st.integers(0, rng.MAX_SEED), st.text(max_size=10), st.integers(0, 100), st.integers(-1, 100))
def test_streams_and_positions_differ(seed, did, turn, pos):
    s = rng.TurnStream(seed, did, turn)
    assert s.u64(pos, rng.OUTCOME) == rng.u64(seed, did, turn, pos, rng.OUTCOME)
    draws = {s.u64(pos, k) for k in range(6)}
    assert len(draws) == 6


@given(st.integers(0, rng.MAX_SEED), st.integers(1, 10**6), st.integers(0, 50))
def test_below_in_range(seed, n, pos):
    assert 0 <= rng.TurnStream(seed, "x", 0).below(n, pos, 0) < n


def test_below_roughly_uniform():
    s = rng.TurnStream(1, "u", 0)
    counts = [0] * 4
    for pos in range(20000):
        counts[s.below(4, pos, 0)] += 1
    # 3 sigma of Binomial(20000, 1/4) is about 184
    assert all(abs(c - 5000) < 184 for c in counts)


@pytest.mark.parametrize("bad", [-1, 2**64, 1.0, True, "3"])
def test_check_seed_rejects(bad):
    with pytest.raises(ValueError):
        rng.check_seed(bad)
