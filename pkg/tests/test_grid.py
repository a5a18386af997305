from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from directsum.grid import (
    BitSource,
    BudgetExceeded,
    GridDomain,
    RestrictionPattern,
    UnsupportedParameter,
    agreement_correlation,
    complement,
    interpolate,
    noise_sample,
    restriction_apply,
    restriction_sample,
)
from directsum.functions import TruthTable


def test_interpolate_example():
    assert interpolate((0, 1, 2), (2, 1, 0), (1, 0, 1)) == (2, 1, 0)


def test_interpolate_extremes():
    a, b = (0, 2, 1), (1, 1, 0)
    assert interpolate(a, b, (0, 0, 0)) == a
    assert interpolate(a, b, (1, 1, 1)) == b


def test_interpolate_rejects_bad_input():
    with pytest.raises(ValueError):
        interpolate((0, 1), (1, 0, 1), (0, 1))
    with pytest.raises(ValueError):
        interpolate((0, 1), (1, 0), (0, 2))


@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_interpolation_swap_identity(n, d, seed):
    src = BitSource(seed)
    dom = GridDomain.uniform(n, d)
    a, b, x = src.point(dom), src.point(dom), src.mask(d)
    assert interpolate(a, b, x) == interpolate(b, a, complement(x))


def test_domain_index_roundtrip():
    dom = GridDomain((3, 2, 4))
    pts = dom.all_points()
    assert pts.shape == (24, 3)
    assert np.array_equal(dom.index(pts), np.arange(24))
    assert tuple(pts[1]) == (0, 0, 1)
    assert dom.index((2, 1, 3)) == 23


def test_domain_validation():
    with pytest.raises(ValueError):
        GridDomain((1, 2))
    with pytest.raises(ValueError):
        GridDomain.cube(3).validate((0, 2, 0))
    with pytest.raises(ValueError):
        GridDomain.cube(3).validate((0, 1))
    with pytest.raises(UnsupportedParameter):
        GridDomain((2, 3)).n


def test_budget_refusal():
    with pytest.raises(BudgetExceeded) as info:
        GridDomain.cube(30).all_points()
    assert info.value.required == 2**30


def test_bitsource_determinism_and_counting():
    a, b = BitSource(5), BitSource(5)
    assert np.array_equal(a.bits(100), b.bits(100))
    assert a.bits_consumed == 100
    a.uniform(8, 10)
    assert a.bits_consumed == 130
    assert np.array_equal(a.spawn(3).bits(64), b.spawn(3).bits(64))
    assert not np.array_equal(a.spawn(3).bits(64), a.spawn(4).bits(64))


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_uniform_is_uniform(n):
    vals = BitSource(11).uniform(n, 200_000)
    freq = np.bincount(vals, minlength=n) / vals.size
    assert vals.min() >= 0 and vals.max() < n
    assert np.allclose(freq, 1 / n, atol=0.006)


def test_bernoulli_exact_rate_and_cost():
    src = BitSource(2)
    vals = src.bernoulli(Fraction(1, 3), 200_000)
    assert abs(vals.mean() - 1 / 3) < 0.006
    assert abs(src.bits_consumed / 200_000 - 2) < 0.02


def test_noise_parameters():
    src = BitSource(0)
    dom3 = GridDomain.uniform(3, 4)
    with pytest.raises(ValueError):
        noise_sample((0, 1, 1), 1, src)
    with pytest.raises(UnsupportedParameter):
        noise_sample((0, 1, 2, 0), Fraction(-1, 2), src, dom3)


@pytest.mark.parametrize("p", [Fraction(1, 2), Fraction(-1, 2), Fraction(0)])
def test_noise_correlation_on_cube(p):
    src = BitSource(4)
    x = src.point(GridDomain.cube(1), 200_000)
    y = noise_sample(x, p, src)
    corr = np.mean((-1.0) ** (x ^ y))
    assert abs(corr - float(p)) < 0.01


@pytest.mark.parametrize("lazy", [False, True])
def test_noise_agreement_on_grid(lazy):
    n = 5
    dom = GridDomain.uniform(n, 1)
    p = agreement_correlation(n)
    src = BitSource(9)
    x = src.point(dom, 200_000)
    y = noise_sample(x, p, src, dom, lazy=lazy)
    assert abs(np.mean(x == y) - 0.75) < 0.005
    off = y[x != y]
    counts = np.bincount(off, minlength=n)
    assert counts.min() > 0.8 * counts.mean()


def test_restriction_pattern_weights_sum_to_one():
    assert sum(r.weight for r in RestrictionPattern.all(3)) == 1


def test_restriction_sample_law():
    src = BitSource(1)
    draws = [restriction_sample(1, src).actions[0] for _ in range(20_000)]
    assert abs(draws.count(None) / 20_000 - 0.5) < 0.015
    assert abs(draws.count(0) / 20_000 - 0.25) < 0.015


def test_restriction_apply():
    dom = GridDomain.cube(3)
    f = TruthTable(dom, [int(p[0] and p[2]) for p in dom.all_points()])
    g = restriction_apply(f, RestrictionPattern((1, None, None)))
    assert g.domain == GridDomain.cube(2)
    assert list(g.truth_table()) == [0, 1, 0, 1]
    h = restriction_apply(f, RestrictionPattern((1, 0, 1)))
    assert h.domain.d == 0 and list(h.truth_table()) == [1]


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_point_draws_are_deterministic(seed):
    dom = GridDomain.uniform(3, 5)
    assert np.array_equal(BitSource(seed).point(dom, 7), BitSource(seed).point(dom, 7))


@pytest.mark.parametrize("n,d", [(2, 4), (3, 3), (3, 4)])
def test_interpolation_swap_identity_exhaustive(n, d):
    dom = GridDomain.uniform(n, d)
    pts = dom.all_points()
    masks = GridDomain.cube(d).all_points()
    a = pts[:, None, None, :]
    b = pts[None, :, None, :]
    x = masks[None, None, :, :]
    assert np.array_equal(interpolate(a, b, x), interpolate(b, a, 1 - x))
