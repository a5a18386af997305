"""Randomized direct-sum and affinity testers.

Every tester here except the direct product test is a parity check: it
accepts iff the F_2-sum of the queried values is zero.  A tester is described
by three pieces that the rest of the package composes:

* ``draw`` samples the raw randomness (lazily, charging a :class:`BitSource`),
* ``local_law`` lists the per-coordinate law of the same raw randomness, used
  by exhaustive enumeration,
* ``queries`` maps raw randomness to the query points.

Because each query coordinate depends only on that coordinate's randomness,
exact analysis is a product over coordinates.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .functions import BooleanFunction, OracleHandle
from .grid import BitSource, GridDomain, UnsupportedParameter, is_power_of_two, noise_sample


class Verdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    VOID = "void"


@dataclass
class TestRun:
    __test__ = False

    verdict: Verdict
    queries: list = field(default_factory=list)
    bits_consumed: int = 0

    @property
    def rejected(self) -> bool:
        return self.verdict is Verdict.REJECT


LocalLaw = list  # [(dict[name, value], Fraction probability), ...]


def _uniform_law(names_sizes: Sequence[tuple[str, int]]) -> LocalLaw:
    names = [n for n, _ in names_sizes]
    sizes = [s for _, s in names_sizes]
    prob = Fraction(1, math.prod(sizes))
    return [(dict(zip(names, vals)), prob) for vals in itertools.product(*(range(s) for s in sizes))]


def _phi(mask: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(mask == 1, b, a)


def _as_oracle(f) -> OracleHandle:
    if isinstance(f, OracleHandle):
        return f
    if isinstance(f, BooleanFunction):
        return OracleHandle(f)
    raise TypeError(f"expected a BooleanFunction or OracleHandle, got {type(f).__name__}")


class Tester:
    """Base class for parity-check testers."""

    name = "tester"
    n_functions = 1
    cube_only = False

    def check(self, domain: GridDomain) -> None:
        if self.cube_only and not domain.is_cube:
            raise UnsupportedParameter(f"{self.name} is defined on the hypercube (n = 2)")

    def n_queries(self, d: int) -> int:
        raise NotImplementedError

    def slots(self, d: int) -> tuple[int, ...]:
        """Index of the function answering each query."""
        return (0,) * self.n_queries(d)

    def draw(self, domain: GridDomain, src: BitSource, size: int) -> dict:
        raise NotImplementedError

    def local_law(self, domain: GridDomain, i: int) -> LocalLaw:
        raise NotImplementedError

    def queries(self, raw: dict) -> np.ndarray:
        """Query points, shape ``(size, q, d)``, in issue order."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"

    def run(self, *oracles, src: BitSource) -> TestRun:
        handles = [_as_oracle(o) for o in oracles]
        if len(handles) != self.n_functions:
            raise ValueError(f"{self.name} takes {self.n_functions} oracle(s)")
        domain = handles[0].domain
        if any(h.domain != domain for h in handles):
            raise ValueError("oracles must share a domain")
        self.check(domain)
        before = src.bits_consumed
        pts = self.queries(self.draw(domain, src, 1))[0]
        answers = [handles[s].query(p) for s, p in zip(self.slots(domain.d), pts)]
        bits = src.bits_consumed - before
        queried = [tuple(int(v) for v in p) for p in pts]
        if any(a is None for a in answers):
            return TestRun(Verdict.VOID, queried, bits)
        verdict = Verdict.REJECT if sum(answers) % 2 else Verdict.ACCEPT
        return TestRun(verdict, queried, bits)

    def simulate(self, functions: Sequence[BooleanFunction], src: BitSource, size: int) -> np.ndarray:
        """Vectorized runs against plain functions; returns a boolean reject array."""
        domain = functions[0].domain
        self.check(domain)
        q = self.n_queries(domain.d)
        chunk = max(1, min(size, 4_000_000 // max(1, q * domain.d)))
        slots = np.asarray(self.slots(domain.d))
        out = np.empty(size, dtype=bool)
        for start in range(0, size, chunk):
            m = min(chunk, size - start)
            pts = self.queries(self.draw(domain, src, m))
            acc = np.zeros(m, dtype=np.uint8)
            if len(functions) == 1:
                acc = np.bitwise_xor.reduce(functions[0]._evaluate(pts).astype(np.uint8), axis=1)
            for s, f in enumerate(functions if len(functions) > 1 else ()):
                cols = np.flatnonzero(slots == s)
                if cols.size:
                    acc ^= np.bitwise_xor.reduce(f._evaluate(pts[:, cols, :]).astype(np.uint8), axis=1)
            out[start : start + m] = acc.astype(bool)
        return out


class BLR(Tester):
    """BLR linearity (3 queries) or affinity (4 queries) on F_2^d."""

    cube_only = True

    def __init__(self, kind: str = "affinity"):
        if kind not in ("linearity", "affinity"):
            raise ValueError("BLR kind must be 'linearity' or 'affinity'")
        self.kind = kind
        self.name = f"blr-{kind}"

    def __repr__(self):
        return f"BLR({self.kind!r})"

    def n_queries(self, d):
        return 3 if self.kind == "linearity" else 4

    def _names(self):
        return ("x", "y") if self.kind == "linearity" else ("x", "y", "z")

    def draw(self, domain, src, size):
        return {name: src.mask(domain.d, size) for name in self._names()}

    def local_law(self, domain, i):
        return _uniform_law([(name, 2) for name in self._names()])

    def queries(self, raw):
        x, y = raw["x"], raw["y"]
        if self.kind == "linearity":
            return np.stack([x, y, x ^ y], axis=1)
        z = raw["z"]
        return np.stack([x, x ^ y, x ^ z, x ^ y ^ z], axis=1)


class Diamond(Tester):
    """Accept iff ``f(a) + f(b) = f(phi_x(a,b)) + f(phi_x(b,a))``.

    With ``rho != 0`` (hypercube only) ``b`` is drawn from ``T_rho(a)``.
    Queries are issued as ``a, b, phi_x(a,b), phi_x(b,a)``; ``x_i`` is only
    drawn where ``a_i != b_i``.
    """

    name = "diamond"

    def __init__(self, rho=0):
        self.rho = Fraction(rho)
        if not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")

    def __repr__(self):
        return f"Diamond(rho={self.rho})" if self.rho else "Diamond()"

    def check(self, domain):
        if self.rho and not domain.is_cube:
            raise UnsupportedParameter("rho-Diamond is defined for n = 2 only")

    def n_queries(self, d):
        return 4

    def draw(self, domain, src, size):
        a = src.point(domain, size)
        b = noise_sample(a, self.rho, src, domain) if self.rho else src.point(domain, size)
        x = np.zeros_like(a)
        differ = a != b
        x[differ] = src.bits(int(differ.sum()))
        return {"a": a, "b": b, "x": x}

    def local_law(self, domain, i):
        n = domain.sizes[i]
        if not self.rho:
            return _uniform_law([("a", n), ("b", n), ("x", 2)])
        rho = self.rho
        law = []
        for a, b, x in itertools.product(range(2), range(2), range(2)):
            if rho > 0:
                pb = rho + (1 - rho) / 2 if a == b else (1 - rho) / 2
            else:
                pb = -rho + (1 + rho) / 2 if a != b else (1 + rho) / 2
            law.append(({"a": a, "b": b, "x": x}, Fraction(1, 4) * pb))
        return law

    def queries(self, raw):
        a, b, x = raw["a"], raw["b"], raw["x"]
        return np.stack([a, b, _phi(x, a, b), _phi(x, b, a)], axis=1)


class Diamond4(Diamond):
    """Four-function Diamond: ``f(a) + g(phi_x(a,b)) + h(phi_x(b,a)) + k(b) = 0``."""

    name = "diamond4"
    n_functions = 4

    def __init__(self):
        super().__init__(0)

    def __repr__(self):
        return "Diamond4()"

    def slots(self, d):
        # issue order a, b, phi_x(a,b), phi_x(b,a) -> f, k, g, h
        return (0, 3, 1, 2)


class SquareInCube(Tester):
    """``f(a) + f(phi_x(a,b)) + f(phi_y(a,b)) + f(phi_{x+y}(a,b)) = 0``.

    ``b_i`` is only drawn where ``x_i`` or ``y_i`` is set.
    """

    name = "square-in-cube"

    def n_queries(self, d):
        return 4

    def draw(self, domain, src, size):
        x = src.mask(domain.d, size)
        y = src.mask(domain.d, size)
        a = src.point(domain, size)
        b = a.copy()
        for i, n_i in enumerate(domain.sizes):
            need = (x[:, i] | y[:, i]).astype(bool)
            b[need, i] = src.uniform(n_i, int(need.sum()))
        return {"a": a, "b": b, "x": x, "y": y}

    def local_law(self, domain, i):
        n = domain.sizes[i]
        return _uniform_law([("a", n), ("b", n), ("x", 2), ("y", 2)])

    def queries(self, raw):
        a, b, x, y = raw["a"], raw["b"], raw["x"], raw["y"]
        return np.stack([a, _phi(x, a, b), _phi(y, a, b), _phi(x ^ y, a, b)], axis=1)


class AffineOnSubcube(Tester):
    """Run a hypercube affinity tester on ``x -> f(phi_x(a, b))``."""

    name = "affine-on-subcube"

    def __init__(self, inner: Tester | str = "blr-affinity"):
        if isinstance(inner, str):
            inner = make_tester(inner)
        if inner.n_functions != 1:
            raise ValueError("inner tester must test a single function")
        self.inner = inner

    def __repr__(self):
        return f"{type(self).__name__}(inner={self.inner!r})"

    def check(self, domain):
        self.inner.check(GridDomain.cube(domain.d))

    def n_queries(self, d):
        return self.inner.n_queries(d)

    def draw(self, domain, src, size):
        raw = {"a": src.point(domain, size), "b": src.point(domain, size)}
        inner = self.inner.draw(GridDomain.cube(domain.d), src, size)
        raw.update({"in_" + k: v for k, v in inner.items()})
        return raw

    def local_law(self, domain, i):
        n = domain.sizes[i]
        outer = _uniform_law([("a", n), ("b", n)])
        inner = self.inner.local_law(GridDomain.cube(domain.d), i)
        law = []
        for (ov, op), (iv, ip) in itertools.product(outer, inner):
            vals = dict(ov)
            vals.update({"in_" + k: v for k, v in iv.items()})
            law.append((vals, op * ip))
        return law

    def queries(self, raw):
        inner_raw = {k[3:]: v for k, v in raw.items() if k.startswith("in_")}
        masks = self.inner.queries(inner_raw)
        return _phi(masks, raw["a"][:, None, :], raw["b"][:, None, :])


class DiamondInCube(AffineOnSubcube):
    """The Diamond test run on the restriction of f to a random subcube.

    Lazy sampler: the inner selectors ``u, v`` are always drawn, ``x_i`` only
    where ``u_i != v_i``, ``a_i`` only if some selector is 0 and ``b_i`` only if
    some selector is 1.
    """

    name = "diamond-in-cube"

    def __init__(self):
        super().__init__(Diamond())

    def __repr__(self):
        return "DiamondInCube()"

    def draw(self, domain, src, size):
        d = domain.d
        u = src.mask(d, size)
        v = src.mask(d, size)
        x = np.zeros_like(u)
        differ = u != v
        x[differ] = src.bits(int(differ.sum()))
        a = np.zeros((size, d), np.int64)
        b = np.zeros((size, d), np.int64)
        for i, n_i in enumerate(domain.sizes):
            need_a = (u[:, i] == 0) | (v[:, i] == 0)
            need_b = (u[:, i] == 1) | (v[:, i] == 1)
            a[need_a, i] = src.uniform(n_i, int(need_a.sum()))
            b[need_b, i] = src.uniform(n_i, int(need_b.sum()))
        return {"a": a, "b": b, "in_a": u, "in_b": v, "in_x": x}


class Shapka(Tester):
    """Accept iff ``f(b) = sum_i f(phi_{e_i}(a, b))`` (plus ``f(a)`` for even d)."""

    name = "shapka"

    def n_queries(self, d):
        return d + 1 + (d % 2 == 0)

    def draw(self, domain, src, size):
        return {"a": src.point(domain, size), "b": src.point(domain, size)}

    def local_law(self, domain, i):
        n = domain.sizes[i]
        return _uniform_law([("a", n), ("b", n)])

    def queries(self, raw):
        a, b = raw["a"], raw["b"]
        size, d = a.shape
        hybrids = np.repeat(a[:, None, :], d, axis=1)
        diag = np.arange(d)
        hybrids[:, diag, diag] = b
        parts = [b[:, None, :], hybrids]
        if d % 2 == 0:
            parts.append(a[:, None, :])
        return np.concatenate(parts, axis=1)


class SubcubeDegreeK(Tester):
    """(k+1)-flat degree-k test on ``x -> f(phi_x(a, b))``.

    Accept iff ``sum_{S subset [k+1]} f(phi_{x + sum_{i in S} y_i}(a, b)) = 0``.
    """

    name = "degree-k"

    def __init__(self, k: int = 1):
        if k < 1:
            raise ValueError("degree k must be >= 1")
        self.k = int(k)

    def __repr__(self):
        return f"SubcubeDegreeK(k={self.k})"

    def n_queries(self, d):
        return 1 << (self.k + 1)

    def _names(self):
        return ["x"] + [f"y{j}" for j in range(self.k + 1)]

    def draw(self, domain, src, size):
        raw = {"a": src.point(domain, size), "b": src.point(domain, size)}
        raw.update({name: src.mask(domain.d, size) for name in self._names()})
        return raw

    def local_law(self, domain, i):
        n = domain.sizes[i]
        return _uniform_law([("a", n), ("b", n)] + [(name, 2) for name in self._names()])

    def queries(self, raw):
        a, b = raw["a"], raw["b"]
        ys = [raw[f"y{j}"] for j in range(self.k + 1)]
        pts = []
        for s in range(1 << (self.k + 1)):
            mask = raw["x"].copy()
            for j, y in enumerate(ys):
                if s >> j & 1:
                    mask ^= y
            pts.append(_phi(mask, a, b))
        return np.stack(pts, axis=1)


class DirectProductTest:
    """Agreement test for vector-valued ``F: [n]^d -> tuples``.

    Sample x, put each coordinate in A with probability 3/4, resample the
    coordinates outside A to get y; accept iff ``F(x)_i = F(y)_i`` on A.
    """

    name = "direct-product"
    keep = Fraction(3, 4)

    def draw(self, domain, src, size):
        x = src.point(domain, size)
        A = src.bernoulli(self.keep, (size, domain.d))
        y = x.copy()
        for i, n_i in enumerate(domain.sizes):
            out = A[:, i] == 0
            y[out, i] = src.uniform(n_i, int(out.sum()))
        return {"x": x, "A": A, "y": y}

    def local_law(self, domain, i):
        n = domain.sizes[i]
        law = [({"x": v, "A": 1, "y": v}, self.keep / n) for v in range(n)]
        law += [({"x": v, "A": 0, "y": w}, (1 - self.keep) / (n * n)) for v in range(n) for w in range(n)]
        return law

    def run(self, F, domain: GridDomain, src: BitSource) -> TestRun:
        before = src.bits_consumed
        raw = self.draw(domain, src, 1)
        x, A, y = (tuple(int(v) for v in raw[k][0]) for k in ("x", "A", "y"))
        fx, fy = F(x), F(y)
        ok = all(fx[i] == fy[i] for i in range(domain.d) if A[i])
        return TestRun(Verdict.ACCEPT if ok else Verdict.REJECT, [x, y], src.bits_consumed - before)


TESTERS = {
    "blr-linearity": lambda **kw: BLR("linearity"),
    "blr-affinity": lambda **kw: BLR("affinity"),
    "diamond": lambda rho=0, **kw: Diamond(rho),
    "diamond4": lambda **kw: Diamond4(),
    "square-in-cube": lambda **kw: SquareInCube(),
    "affine-on-subcube": lambda inner="blr-affinity", **kw: AffineOnSubcube(inner),
    "diamond-in-cube": lambda **kw: DiamondInCube(),
    "shapka": lambda **kw: Shapka(),
    "degree-k": lambda k=1, **kw: SubcubeDegreeK(k),
}


def make_tester(kind, **params) -> Tester:
    if isinstance(kind, Tester):
        return kind
    try:
        factory = TESTERS[kind]
    except KeyError:
        raise ValueError(f"unknown test kind {kind!r}; choose from {sorted(TESTERS)}") from None
    return factory(**params)


# -- functional entry points ---------------------------------------------------


def blr(kind: str, oracle, src: BitSource) -> TestRun:
    return BLR(kind).run(oracle, src=src)


def diamond(oracle, src: BitSource, rho=0) -> TestRun:
    return Diamond(rho).run(oracle, src=src)


def diamond4(f, g, h, k, src: BitSource) -> TestRun:
    return Diamond4().run(f, g, h, k, src=src)


def square_in_cube(oracle, src: BitSource) -> TestRun:
    return SquareInCube().run(oracle, src=src)


def affine_on_subcube(oracle, inner, src: BitSource) -> TestRun:
    return AffineOnSubcube(inner).run(oracle, src=src)


def diamond_in_cube(oracle, src: BitSource) -> TestRun:
    return DiamondInCube().run(oracle, src=src)


def shapka(oracle, src: BitSource) -> TestRun:
    return Shapka().run(oracle, src=src)


def subcube_degree_k(oracle, k: int, src: BitSource) -> TestRun:
    return SubcubeDegreeK(k).run(oracle, src=src)


def direct_product_test(F, src: BitSource, domain: GridDomain | None = None) -> TestRun:
    if domain is None:
        domain = F.domain
    return DirectProductTest().run(F, domain, src)


# -- randomness accounting -----------------------------------------------------

ACCOUNTED = {"square-in-cube": SquareInCube, "diamond": Diamond, "diamond-in-cube": DiamondInCube}


def expected_bits(test_kind: str, n: int, d: int) -> Fraction:
    """Closed-form expected bit cost of the lazy samplers (n a power of two)."""
    if not is_power_of_two(n) or n < 2:
        raise UnsupportedParameter("bit accounting needs n a power of two")
    lg = n.bit_length() - 1
    if test_kind == "square-in-cube":
        return (2 + Fraction(7, 4) * lg) * d
    if test_kind == "diamond":
        return (2 * lg + 1 - Fraction(1, n)) * d
    if test_kind == "diamond-in-cube":
        return (Fraction(5, 2) + Fraction(3, 2) * lg) * d
    raise ValueError(f"no closed form for {test_kind!r}")


def lazy_query_sampler(test_kind: str, domain: GridDomain, src: BitSource, accounting: bool = True) -> list:
    """One query tuple of the named test, drawn with the lazy sampler."""
    if test_kind not in ACCOUNTED:
        raise ValueError(f"no lazy sampler for {test_kind!r}")
    if accounting and not (domain.is_uniform and is_power_of_two(domain.n)):
        raise UnsupportedParameter("bit accounting needs a uniform alphabet of power-of-two size")
    tester = ACCOUNTED[test_kind]()
    pts = tester.queries(tester.draw(domain, src, 1))[0]
    return [tuple(int(v) for v in p) for p in pts]
