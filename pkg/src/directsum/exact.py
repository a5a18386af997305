"""Exhaustive-enumeration oracles: exact rejection probabilities, distances to
the function classes, and Walsh-Hadamard identities.

All results are exact rationals.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .functions import BooleanFunction, DirectSum, direct_sum_tables
from .grid import DEFAULT_BUDGET, BudgetExceeded, GridDomain, RestrictionPattern, UnsupportedParameter
from .testers import DirectProductTest, Tester, make_tester


class ExactValue(Fraction):
    """A rational with a note on which enumeration produced it."""

    def __new__(cls, numerator=0, denominator=None, provenance: str = ""):
        self = super().__new__(cls, numerator, denominator)
        self.provenance = provenance
        return self

    def __repr__(self):
        return f"ExactValue({self.numerator}/{self.denominator}, {self.provenance!r})"


def _require_cube(f: BooleanFunction, what: str) -> None:
    if not f.domain.is_cube:
        raise UnsupportedParameter(f"{what} is defined for n = 2 only")


# ---------------------------------------------------------------------------
# query plans


@dataclass
class QueryPlan:
    """Every outcome of a tester's randomness with its exact weight.

    ``indices[r, j]`` is the flat index of query j in outcome r; the
    probability of outcome r is ``weights[r] / denominator``.
    """

    domain: GridDomain
    indices: np.ndarray
    weights: np.ndarray
    denominator: int
    slots: tuple

    @property
    def outcomes(self) -> int:
        return int(self.indices.shape[0])

    def reject_weights(self, tables: Sequence[np.ndarray]) -> np.ndarray:
        """Total rejecting weight for a batch of functions.

        ``tables`` holds one ``(m, N)`` array (or a single ``(N,)`` table) per
        function slot; returns ``m`` integer weights.
        """
        tabs = [np.atleast_2d(np.asarray(t, dtype=np.uint8)) for t in tables]
        m = tabs[0].shape[0]
        out = np.zeros(m, dtype=object if self.weights.dtype == object else np.int64)
        slots = np.asarray(self.slots)
        step = max(1, 20_000_000 // max(1, self.indices.size))
        for start in range(0, m, step):
            stop = min(m, start + step)
            acc = np.zeros((stop - start, self.outcomes), dtype=np.uint8)
            for s, tab in enumerate(tabs):
                cols = self.indices[:, slots == s]
                if cols.size:
                    acc ^= np.bitwise_xor.reduce(tab[start:stop][:, cols], axis=2)
            out[start:stop] = acc.astype(self.weights.dtype) @ self.weights
        return out

    def rejection(self, *tables) -> Fraction:
        return Fraction(int(self.reject_weights(tables)[0]), self.denominator)


def _law_arrays(law):
    names = list(law[0][0])
    vals = np.array([[v[k] for k in names] for v, _ in law], dtype=np.int64)
    probs = [p for _, p in law]
    den = math.lcm(*(p.denominator for p in probs))
    w = [int(p * den) for p in probs]
    if sum(w) != den:
        raise AssertionError("local law does not sum to one")
    return names, vals, w, den


def enumerate_raw(tester, domain: GridDomain, budget: int = DEFAULT_BUDGET):
    """All raw-randomness outcomes as ``(raw dict, weights, denominator)``."""
    laws = [_law_arrays(tester.local_law(domain, i)) for i in range(domain.d)]
    total = math.prod(len(w) for _, _, w, _ in laws)
    if total > budget:
        raise BudgetExceeded(f"exact enumeration of {tester.name}", total, budget)
    digits = np.unravel_index(np.arange(total), [len(w) for _, _, w, _ in laws])
    names = laws[0][0]
    raw = {k: np.stack([vals[digits[i], j] for i, (_, vals, _, _) in enumerate(laws)], axis=1) for j, k in enumerate(names)}
    denominator = math.prod(den for *_, den in laws)
    big = denominator >= 1 << 62
    weights = np.ones(total, dtype=object if big else np.int64)
    for i, (_, _, w, _) in enumerate(laws):
        weights = weights * np.asarray(w, dtype=object if big else np.int64)[digits[i]]
    return raw, weights, denominator


def query_plan(test_kind, domain: GridDomain, budget: int = DEFAULT_BUDGET, **params) -> QueryPlan:
    tester = make_tester(test_kind, **params)
    tester.check(domain)
    raw, weights, den = enumerate_raw(tester, domain, budget)
    pts = tester.queries(raw)
    idx = pts @ domain.strides
    return QueryPlan(domain, idx, weights, den, tuple(tester.slots(domain.d)))


def exact_rejection_probability(test_kind, f, budget: int = DEFAULT_BUDGET, **params) -> ExactValue:
    """Pr[reject] by full enumeration of the tester's randomness.

    ``f`` is a function, or a tuple ``(f, g, h, k)`` for ``diamond4``.
    """
    funcs = tuple(f) if isinstance(f, (tuple, list)) else (f,)
    tester = make_tester(test_kind, **params)
    if len(funcs) == 1 and tester.n_functions > 1:
        funcs = funcs * tester.n_functions
    plan = query_plan(tester, funcs[0].domain, budget)
    value = plan.rejection(*[g.truth_table(budget) for g in funcs])
    return ExactValue(value, provenance=f"{tester.name} over {plan.outcomes} outcomes")


def rejection_probabilities(test_kind, tables, domain: GridDomain, budget: int = DEFAULT_BUDGET, **params) -> list[Fraction]:
    """Exact rejection probabilities for a batch of truth tables (one per row)."""
    plan = query_plan(test_kind, domain, budget, **params)
    tabs = np.atleast_2d(np.asarray(tables, dtype=np.uint8))
    return [Fraction(int(w), plan.denominator) for w in plan.reject_weights([tabs] * len(set(plan.slots)))]


def exact_direct_product_rejection(F, domain: GridDomain, budget: int = DEFAULT_BUDGET) -> ExactValue:
    """Pr[reject] of the direct product test, enumerating every ``(x, A, y)``."""
    tester = DirectProductTest()
    raw, weights, den = enumerate_raw(tester, domain, budget)
    values = np.array([F(tuple(int(v) for v in p)) for p in domain.all_points(budget)], dtype=np.int64)
    fx = values[raw["x"] @ domain.strides]
    fy = values[raw["y"] @ domain.strides]
    reject = np.any((fx != fy) & (raw["A"] == 1), axis=1)
    return ExactValue(Fraction(int(weights[reject].sum()), den), provenance=f"direct-product over {len(weights)} outcomes")


# ---------------------------------------------------------------------------
# Fourier analysis


@dataclass(frozen=True)
class Spectrum:
    """Fourier coefficients of ``(-1)^f`` with a shared denominator ``2^d``.

    Subset masks follow the truth-table bit order: coordinate i is bit
    ``d - 1 - i``.
    """

    d: int
    numerators: np.ndarray

    @property
    def denominator(self) -> int:
        return 1 << self.d

    def mask(self, subset: Iterable[int]) -> int:
        m = 0
        for i in subset:
            if not 0 <= i < self.d:
                raise ValueError("coordinate out of range")
            m |= 1 << (self.d - 1 - i)
        return m

    def subset(self, mask: int) -> tuple[int, ...]:
        return tuple(i for i in range(self.d) if mask >> (self.d - 1 - i) & 1)

    def coefficient(self, subset: Iterable[int] = ()) -> Fraction:
        return Fraction(int(self.numerators[self.mask(subset)]), self.denominator)

    def __getitem__(self, mask: int) -> Fraction:
        return Fraction(int(self.numerators[mask]), self.denominator)

    def items(self):
        for m in range(1 << self.d):
            yield self.subset(m), self[m]

    def max_abs(self) -> Fraction:
        return Fraction(int(np.abs(self.numerators).max()), self.denominator)

    def argmax_abs(self) -> int:
        return int(np.argmax(np.abs(self.numerators)))

    def parseval(self) -> Fraction:
        return Fraction(int(sum(int(c) ** 2 for c in self.numerators)), self.denominator**2)


def fwht(values: np.ndarray) -> np.ndarray:
    """In-place-style fast Walsh-Hadamard transform along the last axis (d * 2^d)."""
    out = np.array(values, dtype=np.int64, copy=True)
    N = out.shape[-1]
    h = 1
    while h < N:
        view = out.reshape(out.shape[:-1] + (N // (2 * h), 2, h))
        lo = view[..., 0, :].copy()
        hi = view[..., 1, :]
        view[..., 0, :] = lo + hi
        view[..., 1, :] = lo - hi
        h *= 2
    return out


def wht(f: BooleanFunction) -> Spectrum:
    _require_cube(f, "the Walsh-Hadamard transform")
    signs = 1 - 2 * f.truth_table().astype(np.int64)
    return Spectrum(f.domain.d, fwht(signs))


def spectra(tables: np.ndarray) -> np.ndarray:
    """Integer WHT numerators for a batch of cube truth tables (rows)."""
    return fwht(1 - 2 * np.atleast_2d(tables).astype(np.int64))


# ---------------------------------------------------------------------------
# distances


def closest_direct_sums(f: BooleanFunction, budget: int = DEFAULT_BUDGET) -> tuple[ExactValue, list[DirectSum]]:
    """Minimum distance to the direct sums and every minimizer, by enumeration."""
    dom = f.domain
    total = DirectSum.count(dom)
    if total * dom.size > budget * 8:
        raise BudgetExceeded("direct-sum distance", total, budget)
    cands = direct_sum_tables(dom, budget)
    diffs = np.count_nonzero(cands != f.truth_table(budget)[None, :], axis=1)
    best = int(diffs.min())
    winners = [DirectSum.from_bits(dom, int(c)) for c in np.flatnonzero(diffs == best)]
    return ExactValue(best, dom.size, provenance=f"min over {total} direct sums"), winners


def affine_from_mask(d: int, mask: int, constant: int) -> DirectSum:
    tabs = []
    for i in range(d):
        bit = mask >> (d - 1 - i) & 1
        tabs.append([0, bit])
    tabs[0] = [constant, constant ^ tabs[0][1]]
    return DirectSum(tabs)


def dist_to_direct_sum(f: BooleanFunction, method: str = "auto", budget: int = DEFAULT_BUDGET) -> tuple[ExactValue, DirectSum]:
    """Distance to the nearest direct sum and one nearest direct sum.

    ``method="fourier"`` (n = 2 only) reads it off the spectrum as
    ``(1 - max_S |f^(S)|) / 2``; ``"enumerate"`` scans every canonical
    direct sum.  ``"auto"`` uses the spectrum on the hypercube.
    """
    if method == "auto":
        method = "fourier" if f.domain.is_cube else "enumerate"
    if method == "enumerate":
        value, winners = closest_direct_sums(f, budget)
        return value, winners[0]
    if method != "fourier":
        raise ValueError(f"unknown method {method!r}")
    spec = wht(f)
    m = spec.argmax_abs()
    top = spec[m]
    value = (1 - abs(top)) / 2
    witness = affine_from_mask(spec.d, m, int(top < 0))
    return ExactValue(value, provenance="spectral (1 - max|f^(S)|)/2"), witness


def monomial_tables(d: int, k: int) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """All monomials of degree <= k over F_2^d with their truth tables."""
    pts = GridDomain.cube(d).all_points()
    monos = [S for r in range(k + 1) for S in itertools.combinations(range(d), r)]
    tabs = np.array([np.all(pts[:, list(S)] == 1, axis=1) if S else np.ones(len(pts), bool) for S in monos], dtype=np.uint8)
    return monos, tabs


def polynomial_tables(d: int, k: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Truth tables of all ``2^M`` polynomials of degree <= k (row c has coefficient vector c)."""
    monos, tabs = monomial_tables(d, k)
    M = len(monos)
    if (1 << M) > budget:
        raise BudgetExceeded(f"degree-{k} polynomial enumeration", 1 << M, budget)
    out = np.zeros((1 << M, tabs.shape[1]), np.uint8)
    for j in range(M):
        block = 1 << j
        out[block : 2 * block] = out[:block] ^ tabs[j]
    return out


def dist_to_junta_degree(f: BooleanFunction, k: int, budget: int = DEFAULT_BUDGET) -> ExactValue:
    """Distance to functions of junta-degree <= k (degree-k polynomials on n = 2)."""
    _require_cube(f, "junta-degree distance")
    polys = polynomial_tables(f.domain.d, k, budget)
    diffs = np.count_nonzero(polys != f.truth_table()[None, :], axis=1)
    return ExactValue(int(diffs.min()), f.domain.size, provenance=f"min over {len(polys)} degree-{k} polynomials")


def _complement_index(d: int) -> np.ndarray:
    N = 1 << d
    return (N - 1) ^ np.arange(N)


def dist_even_or_odd(f: BooleanFunction) -> ExactValue:
    """Distance to the union of Even (f(x+1)=f(x)) and Odd (f(x+1)=f(x)+1)."""
    _require_cube(f, "EvenOrOdd distance")
    tab = f.truth_table()
    N = tab.size
    neq = int(np.count_nonzero(tab != tab[_complement_index(f.domain.d)]))
    return ExactValue(min(neq, N - neq), 2 * N, provenance="paired-point count")


class _RestrictionIndex:
    """Index arrays for all ``3^d`` restriction patterns of a d-cube."""

    def __init__(self, d: int):
        self.d = d
        self.patterns = list(RestrictionPattern.all(d))
        strides = 1 << np.arange(d - 1, -1, -1)
        self.blocks = []
        for r in self.patterns:
            free = list(r.free)
            m = len(free)
            sub = GridDomain.cube(m).all_points() if m else np.zeros((1, 0), np.int64)
            pts = np.zeros((len(sub), d), np.int64)
            for i, a in enumerate(r.actions):
                if a is not None:
                    pts[:, i] = a
            pts[:, free] = sub
            comp = pts.copy()
            comp[:, free] = 1 - sub
            # weight (1/4)^fix (1/2)^free = 2^free / 4^d
            self.blocks.append((pts @ strides, comp @ strides, m, 1 << m))

    def value_numerators(self, tables: np.ndarray) -> np.ndarray:
        """Numerators over ``4^d * 2^(d+1)`` of E[dist(R(f), EvenOrOdd)]."""
        tabs = np.atleast_2d(tables)
        total = np.zeros(tabs.shape[0], dtype=np.int64)
        d = self.d
        for idx, cidx, m, w in self.blocks:
            N = 1 << m
            neq = np.count_nonzero(tabs[:, idx] != tabs[:, cidx], axis=1)
            dist_num = np.minimum(neq, N - neq)  # over 2N
            total += w * dist_num * (1 << (d - m))
        return total

    @property
    def denominator(self) -> int:
        return (4**self.d) * (1 << (self.d + 1))


def expected_restricted_distance(f: BooleanFunction, budget: int = DEFAULT_BUDGET) -> ExactValue:
    """Exact E over random restrictions of dist(R(f), EvenOrOdd)."""
    _require_cube(f, "restricted EvenOrOdd distance")
    d = f.domain.d
    if 3**d > budget:
        raise BudgetExceeded("restriction patterns", 3**d, budget)
    ri = _RestrictionIndex(d)
    num = int(ri.value_numerators(f.truth_table())[0])
    return ExactValue(num, ri.denominator, provenance=f"sum over {3 ** d} restriction patterns")


def expected_restricted_distances(tables: np.ndarray, d: int) -> list[Fraction]:
    ri = _RestrictionIndex(d)
    return [Fraction(int(v), ri.denominator) for v in ri.value_numerators(tables)]


def noise_stability(f: BooleanFunction, rho=Fraction(1, 2)) -> ExactValue:
    """``sum_S rho^|S| f^(S)^2``, checked against the direct definition.

    The direct route enumerates all pairs ``(x, y)`` with ``y ~ T_rho(x)`` and
    computes ``1 - 2 Pr[f(x) != f(y)]``; the two must agree exactly.
    """
    _require_cube(f, "noise stability")
    rho = Fraction(rho)
    d = f.domain.d
    spec = wht(f)
    sizes = np.array([bin(m).count("1") for m in range(1 << d)])
    spectral = sum(rho ** int(s) * Fraction(int(c) ** 2) for s, c in zip(sizes, spec.numerators)) / (4**d)

    tab = f.truth_table().astype(np.int64)
    N = 1 << d
    idx = np.arange(N)
    hamming = np.array([bin(v).count("1") for v in range(N)])
    # Pr[y_i = x_i] = (1 + rho)/2, Pr[y_i != x_i] = (1 - rho)/2
    same, diff = (1 + rho) / 2, (1 - rho) / 2
    pr_dist = [same ** (d - h) * diff**h for h in range(d + 1)]
    disagree = Fraction(0)
    for x in range(N):
        ys = idx[tab[idx] != tab[x]]
        for h, cnt in zip(*np.unique(hamming[ys ^ x], return_counts=True)):
            disagree += pr_dist[int(h)] * int(cnt)
    direct = 1 - 2 * disagree / N
    if direct != spectral:
        raise AssertionError(f"noise stability routes disagree: {direct} != {spectral}")
    return ExactValue(spectral, provenance="spectral sum, confirmed by enumeration")


Polynomial = Sequence[Sequence[int]]


def _poly_table(poly: Polynomial, d: int) -> np.ndarray:
    pts = GridDomain.cube(d).all_points()
    acc = np.zeros(len(pts), np.uint8)
    for mono in poly:
        mono = list(mono)
        if any(not 0 <= i < d for i in mono):
            raise ValueError("monomial variable out of range")
        acc ^= np.all(pts[:, mono] == 1, axis=1).astype(np.uint8) if mono else np.uint8(1)
    return acc


def biased_nonzero_weight(poly: Polynomial, marginals: Sequence) -> ExactValue:
    """``Pr_D[p(x) != 0]`` under independent coordinates with ``Pr[x_i = 1] = marginals[i]``.

    ``poly`` is a collection of monomials, each an iterable of variable indices
    (the empty monomial is the constant 1).
    """
    d = len(marginals)
    ps = [Fraction(p) for p in marginals]
    if any(not 0 <= p <= 1 for p in ps):
        raise ValueError("marginals must be probabilities")
    tab = _poly_table(poly, d)
    if not tab.any():
        raise ValueError("the zero polynomial has weight zero by definition")
    pts = GridDomain.cube(d).all_points()
    total = Fraction(0)
    for row in pts[tab == 1]:
        w = Fraction(1)
        for bit, p in zip(row, ps):
            w *= p if bit else 1 - p
        total += w
    return ExactValue(total, provenance=f"weighted sum over {1 << d} points")


def biased_point_weights(marginals: Sequence) -> tuple[np.ndarray, int]:
    """Integer point weights (and their denominator) for a product distribution."""
    ps = [Fraction(p) for p in marginals]
    den = math.lcm(*(p.denominator for p in ps))
    d = len(ps)
    pts = GridDomain.cube(d).all_points()
    w = np.ones(len(pts), dtype=object)
    for i, p in enumerate(ps):
        one, zero = int(p * den), int((1 - p) * den)
        w = w * np.where(pts[:, i] == 1, one, zero).astype(object)
    return w, den**d
