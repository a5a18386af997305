import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from directsum.decode import (
    DecodeConfig,
    DecodeFailure,
    decode,
    fast_decode,
    fast_vote_points,
    queries_per_vote,
    shapka_vote,
    shapka_vote_points,
)
from directsum.functions import DirectSum, OracleHandle, corrupt, erasure_wrap
from directsum.grid import BitSource, GridDomain


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_every_fast_vote_is_exact_on_direct_sums(n, d, seed):
    dom = GridDomain.uniform(n, d)
    src = BitSource(seed)
    L = DirectSum.random(dom, src)
    b = src.point(dom)
    pts = fast_vote_points(dom, b, 64, src)
    assert pts.shape[1] == queries_per_vote(dom, "fast")
    votes = np.bitwise_xor.reduce(L.evaluate(pts), axis=1)
    assert np.all(votes == L(tuple(b)))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.sampled_from([3, 5, 7]), st.integers(0, 2**32 - 1))
def test_every_shapka_vote_is_exact_for_odd_d(n, d, seed):
    dom = GridDomain.uniform(n, d)
    src = BitSource(seed)
    L = DirectSum.random(dom, src)
    b = src.point(dom)
    votes = np.bitwise_xor.reduce(L.evaluate(shapka_vote_points(dom, b, 32, src)), axis=1)
    assert np.all(votes == L(tuple(b)))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_fast_vote_queries_are_uniform(n):
    d = 8
    dom = GridDomain.uniform(n, d)
    b = tuple(i % n for i in range(d))
    pts = fast_vote_points(dom, b, 100_000, BitSource(n))
    for j in range(pts.shape[1]):
        for i in range(d):
            freq = np.bincount(pts[:, j, i], minlength=n) / 100_000
            assert np.allclose(freq, 1 / n, atol=0.01), (n, j, i, freq)


def test_shapka_hybrids_are_uniform_on_their_slice():
    b = (0, 1, 2, 0, 1)
    dom = GridDomain.uniform(3, 5)
    pts = shapka_vote_points(dom, b, 100_000, BitSource(1))
    for j in range(5):
        assert np.all(pts[:, j, j] == b[j])
        for i in set(range(5)) - {j}:
            freq = np.bincount(pts[:, j, i], minlength=3) / 100_000
            assert np.allclose(freq, 1 / 3, atol=0.01)


def test_fast_decode_corrected_values():
    dom = GridDomain.uniform(3, 6)
    src = BitSource(0)
    L = DirectSum.random(dom, src)
    f = corrupt(L, count=dom.size // 20, src=src)
    for _ in range(50):
        b = tuple(src.point(dom))
        assert fast_decode(f, b, 51, src) == L(b)


def test_shapka_even_d_warns():
    dom = GridDomain.uniform(3, 4)
    L = DirectSum.random(dom, BitSource(1))
    with pytest.warns(UserWarning):
        assert shapka_vote(L, (0, 1, 2, 0), 5, BitSource(2)) == L((0, 1, 2, 0))


def test_decode_config_validation():
    with pytest.raises(ValueError):
        DecodeConfig(votes=4)
    with pytest.raises(ValueError):
        DecodeConfig(scheme="psychic")


def test_decode_through_oracle_handle_counts_queries():
    dom = GridDomain.uniform(3, 5)
    L = DirectSum.random(dom, BitSource(3))
    h = OracleHandle(L)
    assert decode(h, (0, 1, 2, 1, 0), BitSource(4), DecodeConfig(votes=7)) == L((0, 1, 2, 1, 0))
    assert h.queries == 7 * 3


def test_all_votes_erased_raises():
    dom = GridDomain.uniform(3, 3)
    L = DirectSum.random(dom, BitSource(3))

    def erase_everything(transcript, t):
        return [tuple(p) for p in dom.all_points()]

    h = OracleHandle(L, t=dom.size, strategy=erase_everything)
    with pytest.raises(DecodeFailure):
        fast_decode(h, (0, 0, 0), 3, BitSource(0))


def test_erasure_wrap_still_decodes_fast_scheme():
    # anticipate-fourth keys on 4-query checks; with n = 3 the votes have 3 queries
    dom = GridDomain.uniform(3, 5)
    L = DirectSum.random(dom, BitSource(9))
    h = erasure_wrap(L, t=1)
    assert fast_decode(h, (2, 2, 2, 2, 2), 11, BitSource(1)) == L((2, 2, 2, 2, 2))
