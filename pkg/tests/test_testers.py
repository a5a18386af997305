from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracles as ref
from directsum.exact import exact_direct_product_rejection, exact_rejection_probability
from directsum.functions import DirectProduct, DirectSum, TruthTable, erasure_wrap, named
from directsum.grid import BitSource, GridDomain, UnsupportedParameter
from directsum.harness import estimate_rejection
from directsum.testers import (
    DirectProductTest,
    Verdict,
    blr,
    diamond,
    diamond4,
    expected_bits,
    lazy_query_sampler,
    make_tester,
    shapka,
    square_in_cube,
)


def _random_table(n, d, seed):
    return TruthTable(GridDomain.uniform(n, d), BitSource(seed).bits(n**d))


CASES = [(2, 2, 0), (2, 3, 1), (3, 2, 2), (2, 2, 3), (3, 2, 4), (4, 2, 5)]


@pytest.mark.parametrize("n,d,seed", CASES)
def test_diamond_matches_brute_force(n, d, seed):
    f = _random_table(n, d, seed)
    g = ref.lookup(f.truth_table(), n, d)
    assert exact_rejection_probability("diamond", f) == ref.diamond(g, n, d)


@pytest.mark.parametrize("n,d,seed", CASES[:4])
def test_square_in_cube_matches_brute_force(n, d, seed):
    f = _random_table(n, d, seed)
    g = ref.lookup(f.truth_table(), n, d)
    assert exact_rejection_probability("square-in-cube", f) == ref.square_in_cube(g, n, d)


@pytest.mark.parametrize("n,d,seed", CASES)
def test_shapka_matches_brute_force(n, d, seed):
    f = _random_table(n, d, seed)
    g = ref.lookup(f.truth_table(), n, d)
    assert exact_rejection_probability("shapka", f) == ref.shapka(g, n, d)


@pytest.mark.parametrize("d,seed", [(2, 0), (3, 1), (3, 2)])
def test_blr_matches_brute_force(d, seed):
    f = _random_table(2, d, seed)
    g = ref.lookup(f.truth_table(), 2, d)
    assert exact_rejection_probability("blr-affinity", f) == ref.blr_affinity(g, d)
    assert exact_rejection_probability("blr-linearity", f) == ref.blr_linearity(g, d)


@pytest.mark.parametrize("rho", [Fraction(1, 2), Fraction(-1, 2), Fraction(1, 3)])
def test_rho_diamond_matches_brute_force(rho):
    f = _random_table(2, 3, 7)
    g = ref.lookup(f.truth_table(), 2, 3)
    assert exact_rejection_probability("diamond", f, rho=rho) == ref.rho_diamond(g, 3, rho)


def test_diamond4_matches_brute_force():
    fs = [_random_table(3, 2, s) for s in range(4)]
    gs = [ref.lookup(f.truth_table(), 3, 2) for f in fs]
    assert exact_rejection_probability("diamond4", tuple(fs)) == ref.four_function(*gs, 3, 2)


def test_affine_on_subcube_with_blr_equals_square_in_cube():
    # both read f(a), f(phi_x), f(phi_y), f(phi_{x+y}) up to relabelling of x
    for seed in range(3):
        f = _random_table(3, 2, seed)
        assert exact_rejection_probability("affine-on-subcube", f) == exact_rejection_probability("square-in-cube", f)


def test_golden_values_and_constant_one():
    and2 = named("and", GridDomain.cube(2))
    assert exact_rejection_probability("diamond", and2) == Fraction(1, 8)
    assert exact_rejection_probability("square-in-cube", and2) == Fraction(3, 32)
    assert exact_rejection_probability("blr-affinity", and2) == Fraction(3, 8)
    one = TruthTable(GridDomain.cube(3), np.ones(8, np.uint8))
    # 1 + 1 + 1 is odd for every x, y: the linearity test always rejects
    assert exact_rejection_probability("blr-linearity", one) == 1
    assert exact_rejection_probability("blr-affinity", one) == 0


@pytest.mark.parametrize(
    "kind,params",
    [
        ("diamond", {}),
        ("diamond", {"rho": Fraction(1, 2)}),
        ("square-in-cube", {}),
        ("affine-on-subcube", {}),
        ("diamond-in-cube", {}),
        ("shapka", {}),
        ("degree-k", {"k": 1}),
        ("degree-k", {"k": 2}),
        ("blr-affinity", {}),
    ],
)
def test_monte_carlo_agrees_with_exact(kind, params):
    f = _random_table(2, 3, 11)
    exact = exact_rejection_probability(kind, f, **params)
    est = estimate_rejection(kind, f, 200_000, seed=3, **params)
    assert est.contains(exact), (kind, float(exact), est)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_direct_sums_always_pass(n, d, seed):
    f = DirectSum.random(GridDomain.uniform(n, d), BitSource(seed))
    for kind in ("diamond", "square-in-cube", "diamond-in-cube", "shapka", "affine-on-subcube"):
        assert not make_tester(kind).simulate([f], BitSource(seed), 200).any()


def test_run_reports_queries_in_issue_order():
    f = named("parity", GridDomain.uniform(3, 4))
    run = diamond(f, BitSource(0))
    a, b, p, q = run.queries
    assert run.verdict is Verdict.ACCEPT and len(run.queries) == 4
    for i in range(4):
        assert {p[i], q[i]} == {a[i], b[i]}
    run = shapka(f, BitSource(0))
    assert len(run.queries) == 4 + 1 + 1
    run = square_in_cube(f, BitSource(0))
    assert len(run.queries) == 4
    assert blr("affinity", named("and", GridDomain.cube(3)), BitSource(0)).bits_consumed == 9


def test_diamond4_equal_arguments_reduce_to_diamond():
    f = _random_table(2, 3, 2)
    assert exact_rejection_probability("diamond4", (f, f, f, f)) == exact_rejection_probability("diamond", f)
    run = diamond4(f, f, f, f, BitSource(4))
    assert len(run.queries) == 4


def test_cube_only_testers_refuse_grids():
    f = named("parity", GridDomain.uniform(3, 3))
    with pytest.raises(UnsupportedParameter):
        blr("affinity", f, BitSource(0))
    with pytest.raises(UnsupportedParameter):
        exact_rejection_probability("diamond", f, rho=Fraction(1, 2))


def test_void_on_erasure():
    h = erasure_wrap(named("parity", GridDomain.uniform(3, 4)), t=1)
    assert diamond(h, BitSource(0)).verdict is Verdict.VOID
    h.reset()
    assert square_in_cube(h, BitSource(1)).verdict is Verdict.VOID


@pytest.mark.parametrize("kind", ["diamond", "square-in-cube", "diamond-in-cube", "shapka", "degree-k"])
def test_each_query_is_marginally_uniform(kind):
    dom = GridDomain.uniform(3, 2)
    tester = make_tester(kind)
    pts = tester.queries(tester.draw(dom, BitSource(5), 60_000))
    for j in range(pts.shape[1]):
        counts = np.bincount(dom.index(pts[:, j, :]), minlength=9) / 60_000
        assert np.allclose(counts, 1 / 9, atol=0.01), (kind, j)


def test_lazy_sampler_and_closed_forms():
    pts = lazy_query_sampler("diamond", GridDomain.uniform(4, 5), BitSource(0))
    assert len(pts) == 4 and all(len(p) == 5 for p in pts)
    assert expected_bits("square-in-cube", 4, 100) == 550
    assert expected_bits("diamond", 16, 100) == Fraction(3575, 4)
    assert expected_bits("diamond-in-cube", 16, 100) == 850
    with pytest.raises(UnsupportedParameter):
        expected_bits("diamond", 3, 10)
    with pytest.raises(UnsupportedParameter):
        lazy_query_sampler("diamond", GridDomain.uniform(3, 5), BitSource(0))


def test_direct_product_test():
    dom = GridDomain.uniform(3, 3)
    F = DirectProduct([[0, 1, 2], [2, 2, 0], [1, 0, 1]])
    assert exact_direct_product_rejection(F, dom) == 0
    tester = DirectProductTest()
    assert all(tester.run(F, dom, BitSource(s)).verdict is Verdict.ACCEPT for s in range(50))
    G = DirectProduct(F.tables, overrides={(0, 0, 0): (9, 9, 9)})
    rej = exact_direct_product_rejection(G, dom)
    assert rej > 0
    runs = [tester.run(G, dom, BitSource(s)).verdict is Verdict.REJECT for s in range(20_000)]
    half = 2.58 * (float(rej) * (1 - float(rej)) / 20_000) ** 0.5 + 1e-3
    assert abs(np.mean(runs) - float(rej)) < half


def test_make_tester_unknown():
    with pytest.raises(ValueError):
        make_tester("triangle")


@pytest.mark.parametrize("kind", ["square-in-cube", "diamond", "diamond-in-cube"])
def test_lazy_sampler_marginals_chi_squared(kind):
    dom = GridDomain.uniform(4, 2)
    tester = make_tester(kind)
    pts = tester.queries(tester.draw(dom, BitSource(17), 1_000_000))
    for j in range(pts.shape[1]):
        counts = np.bincount(dom.index(pts[:, j, :]), minlength=16)
        chi2 = float(((counts - 62_500) ** 2 / 62_500).sum())
        assert chi2 < 37.70, (kind, j, chi2)  # 0.999 quantile, 15 degrees of freedom
