"""Boolean functions on grids, oracles with query counting, corruption and
adversarial instances."""
from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .grid import DEFAULT_BUDGET, BitSource, BudgetExceeded, GridDomain, UnsupportedParameter


class BooleanFunction:
    """A total, deterministic map from a grid to F_2.

    Subclasses implement :meth:`_evaluate` on validated integer point arrays.
    """

    domain: GridDomain
    family = "function"

    def evaluate(self, points) -> np.ndarray:
        pts = self.domain.validate(points)
        return self._evaluate(pts).astype(np.uint8)

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, point) -> int:
        return int(self.evaluate(np.asarray(point, dtype=np.int64)))

    def truth_table(self, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        """All values in row-major order (last coordinate fastest)."""
        self.domain.check_budget(budget, "truth table")
        return self._evaluate(self.domain.all_points(budget)).astype(np.uint8)

    def __xor__(self, other: "BooleanFunction") -> "TruthTable":
        if other.domain != self.domain:
            raise ValueError("domain mismatch")
        return TruthTable(self.domain, self.truth_table() ^ other.truth_table())

    def __add__(self, other):
        if isinstance(other, int):
            return TruthTable(self.domain, self.truth_table() ^ (other & 1))
        return self ^ other

    __radd__ = __add__


class TruthTable(BooleanFunction):
    """Explicit bit-packed truth table."""

    family = "table"

    def __init__(self, domain: GridDomain, values):
        vals = np.asarray(values, dtype=np.uint8).reshape(-1)
        if vals.size != domain.size:
            raise ValueError(f"truth table needs {domain.size} entries, got {vals.size}")
        if np.any(vals > 1):
            raise ValueError("truth table entries must be 0 or 1")
        self.domain = domain
        self._packed = np.packbits(vals)

    def _evaluate(self, pts):
        idx = self.domain.index(pts) if self.domain.d else np.zeros(pts.shape[:-1], np.int64)
        idx = np.asarray(idx)
        return (self._packed[idx >> 3] >> (7 - (idx & 7))) & 1

    def truth_table(self, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        return np.unpackbits(self._packed, count=self.domain.size)

    def __eq__(self, other):
        return isinstance(other, BooleanFunction) and other.domain == self.domain and np.array_equal(
            self.truth_table(), other.truth_table()
        )

    def __hash__(self):
        return hash((self.domain, self._packed.tobytes()))

    def __repr__(self):
        bits = "".join(map(str, self.truth_table()[:64]))
        return f"TruthTable(sizes={self.domain.sizes}, bits={bits}{'...' if self.domain.size > 64 else ''})"


class DirectSum(BooleanFunction):
    """``f(x) = sum_i L_i(x_i)`` over F_2, kept in gauge-fixed form.

    Canonical form: ``tables[i][0] == 0`` for every ``i >= 1``; the overall
    constant lives in ``tables[0]``.
    """

    family = "ds"

    def __init__(self, tables: Sequence[Sequence[int]]):
        tabs = [np.asarray(t, dtype=np.uint8) & 1 for t in tables]
        if not tabs:
            raise ValueError("a direct sum needs at least one coordinate table")
        for i in range(1, len(tabs)):
            if tabs[i][0]:
                tabs[i] = tabs[i] ^ 1
                tabs[0] = tabs[0] ^ 1
        self.tables = tuple(tabs)
        self.domain = GridDomain(tuple(len(t) for t in tabs))

    def _evaluate(self, pts):
        acc = np.zeros(pts.shape[:-1], dtype=np.uint8)
        for i, tab in enumerate(self.tables):
            acc ^= tab[pts[..., i]]
        return acc

    def __eq__(self, other):
        if isinstance(other, DirectSum):
            return len(self.tables) == len(other.tables) and all(
                np.array_equal(s, o) for s, o in zip(self.tables, other.tables)
            )
        if isinstance(other, BooleanFunction):
            return other.domain == self.domain and np.array_equal(self.truth_table(), other.truth_table())
        return NotImplemented

    def __hash__(self):
        return hash(tuple(t.tobytes() for t in self.tables))

    def __repr__(self):
        return "DirectSum(%s)" % [t.tolist() for t in self.tables]

    @classmethod
    def zero(cls, domain: GridDomain) -> "DirectSum":
        return cls([np.zeros(s, np.uint8) for s in domain.sizes])

    @classmethod
    def random(cls, domain: GridDomain, src: BitSource) -> "DirectSum":
        return cls([src.bits(s) for s in domain.sizes])

    @classmethod
    def from_bits(cls, domain: GridDomain, code: int) -> "DirectSum":
        """Decode one of the ``2^(1 + sum(n_i - 1))`` canonical forms."""
        tabs = []
        for i, s in enumerate(domain.sizes):
            width = s if i == 0 else s - 1
            chunk = [(code >> j) & 1 for j in range(width)]
            code >>= width
            tabs.append(chunk if i == 0 else [0] + chunk)
        return cls(tabs)

    @staticmethod
    def count(domain: GridDomain) -> int:
        return 1 << (1 + sum(s - 1 for s in domain.sizes))

    @classmethod
    def enumerate(cls, domain: GridDomain, budget: int = DEFAULT_BUDGET) -> Iterator["DirectSum"]:
        total = cls.count(domain)
        if total > budget:
            raise BudgetExceeded("direct-sum enumeration", total, budget)
        for code in range(total):
            yield cls.from_bits(domain, code)

    @classmethod
    def decompose(cls, f: BooleanFunction) -> "DirectSum":
        """Read off per-coordinate tables through the all-zeros base point.

        Exact when ``f`` is a direct sum; otherwise returns the direct sum that
        agrees with ``f`` on the axis lines through the origin.
        """
        dom = f.domain
        base = np.zeros(dom.d, np.int64)
        f0 = int(f.evaluate(base))
        tabs = []
        for i, s in enumerate(dom.sizes):
            pts = np.zeros((s, dom.d), np.int64)
            pts[:, i] = np.arange(s)
            col = f.evaluate(pts)
            tabs.append(col if i == 0 else col ^ f0)
        return cls(tabs)


class Corrupted(BooleanFunction):
    """``base`` with the values at an explicit set of points flipped."""

    family = "corrupted"

    def __init__(self, base: BooleanFunction, flips: Iterable[int]):
        self.base = base
        self.domain = base.domain
        self.flips = np.unique(np.asarray(list(flips), dtype=np.int64))
        if self.flips.size and (self.flips[0] < 0 or self.flips[-1] >= self.domain.size):
            raise ValueError("flip index outside domain")

    @property
    def realized_fraction(self) -> Fraction:
        return Fraction(int(self.flips.size), self.domain.size)

    def _evaluate(self, pts):
        idx = np.asarray(self.domain.index(pts))
        hit = np.isin(idx, self.flips)
        return self.base._evaluate(pts).astype(np.uint8) ^ hit.astype(np.uint8)


def corrupt(f: BooleanFunction, rate=None, src: BitSource | None = None, *, flips=None, count=None) -> Corrupted:
    """Flip ``f`` on a random or explicit set of points.

    Give exactly one of ``rate`` (each point flips independently with that
    probability), ``count`` (a uniformly random set of exactly that many
    points) or ``flips`` (explicit points or flat indices).
    """
    if sum(v is not None for v in (rate, flips, count)) != 1:
        raise ValueError("give exactly one of rate, count or flips")
    dom = f.domain
    if flips is not None:
        arr = np.asarray(list(flips), dtype=np.int64)
        if arr.ndim == 2:
            arr = np.asarray(dom.index(dom.validate(arr)))
        return Corrupted(f, arr)
    if src is None:
        raise ValueError("random corruption needs a BitSource")
    if count is not None:
        if not 0 <= count <= dom.size:
            raise ValueError("count out of range")
        keys = src.uniform(1 << 62, dom.size) if dom.size <= DEFAULT_BUDGET else None
        if keys is None:
            raise BudgetExceeded("exact-count corruption", dom.size, DEFAULT_BUDGET)
        return Corrupted(f, np.argsort(keys, kind="stable")[: int(count)])
    rate = Fraction(rate)
    if not 0 <= rate <= 1:
        raise ValueError("corruption rate must lie in [0, 1]")
    dom.check_budget(DEFAULT_BUDGET, "random corruption")
    hit = src.bernoulli(rate, dom.size).astype(bool)
    return Corrupted(f, np.flatnonzero(hit))


class Majority(BooleanFunction):
    family = "majority"

    def __init__(self, d: int):
        if d < 1 or d % 2 == 0:
            raise ValueError("majority needs odd d")
        self.domain = GridDomain.cube(d)

    def _evaluate(self, pts):
        return (pts.sum(axis=-1) * 2 > self.domain.d).astype(np.uint8)


class Parity(BooleanFunction):
    """``sum_i x_i mod 2``; a direct sum on every grid."""

    family = "parity"

    def __init__(self, domain: GridDomain):
        self.domain = domain

    def _evaluate(self, pts):
        return (pts.sum(axis=-1) & 1).astype(np.uint8)


class And(BooleanFunction):
    family = "and"

    def __init__(self, d: int):
        self.domain = GridDomain.cube(d)

    def _evaluate(self, pts):
        return np.all(pts == 1, axis=-1).astype(np.uint8)


class Dictator(BooleanFunction):
    family = "dictator"

    def __init__(self, domain: GridDomain, i: int = 0):
        if not domain.is_cube:
            raise UnsupportedParameter("dictator is defined on the hypercube")
        if not 0 <= i < domain.d:
            raise ValueError("dictator coordinate out of range")
        self.domain, self.i = domain, i

    def _evaluate(self, pts):
        return pts[..., self.i].astype(np.uint8)


class Constant(BooleanFunction):
    family = "const"

    def __init__(self, domain: GridDomain, value: int = 0):
        self.domain, self.value = domain, int(value) & 1

    def _evaluate(self, pts):
        return np.full(pts.shape[:-1], self.value, dtype=np.uint8)


class RandomFunction(TruthTable):
    """Uniformly random truth table, determined by the seed."""

    family = "random"

    def __init__(self, domain: GridDomain, seed: int):
        domain.check_budget(DEFAULT_BUDGET, "random function")
        self.seed = seed
        super().__init__(domain, BitSource(seed).bits(domain.size))


def named(kind: str, domain: GridDomain, seed: int | None = None) -> BooleanFunction:
    if kind == "majority":
        if not domain.is_cube:
            raise UnsupportedParameter("majority requires n = 2")
        return Majority(domain.d)
    if kind == "parity":
        return Parity(domain)
    if kind == "and":
        if not domain.is_cube:
            raise UnsupportedParameter("and requires n = 2")
        return And(domain.d)
    if kind == "random":
        if seed is None:
            raise ValueError("random functions need a seed")
        return RandomFunction(domain, seed)
    raise ValueError(f"unknown named family {kind!r}")


class HeavyFlip(BooleanFunction):
    """A planted direct sum flipped on every heavy point.

    A point is heavy when more than ``2d/n`` of its coordinates equal the base
    symbol 0.
    """

    family = "querylb"

    def __init__(self, planted: DirectSum):
        self.planted = planted
        self.domain = planted.domain

    @property
    def threshold(self) -> Fraction:
        return Fraction(2 * self.domain.d, self.domain.n)

    def heavy(self, pts) -> np.ndarray:
        pts = np.asarray(pts)
        return (pts == 0).sum(axis=-1) > self.threshold

    def _evaluate(self, pts):
        return self.planted._evaluate(pts) ^ self.heavy(pts).astype(np.uint8)

    def heavy_fraction(self) -> Fraction:
        """Exact fraction of heavy points: a binomial tail with success 1/n."""
        n, d = self.domain.n, self.domain.d
        tail = sum(
            math.comb(d, j) * (n - 1) ** (d - j) for j in range(d + 1) if j > self.threshold
        )
        return Fraction(tail, n**d)


def adversarial_instance(kind: str, domain: GridDomain, src: BitSource, eps=None):
    """Lower-bound instances for local correction.

    ``infolb`` returns ``(f, (Z, L))`` where Z is the zero direct sum, L the
    indicator of ``x_d = 0`` and f sits at distance ``1/(2n)`` from both.
    ``querylb`` returns ``(f, (L, heavy_fraction))`` with f equal to the
    planted L off the heavy points.
    """
    n, d = domain.n, domain.d
    if kind == "infolb":
        if n % 2:
            raise ValueError("infolb needs even n")
        if d < 2:
            raise ValueError("infolb needs d >= 2")
        Z = DirectSum.zero(domain)
        L = DirectSum([np.zeros(s, np.uint8) for s in domain.sizes[:-1]] + [np.eye(1, n, 0, dtype=np.uint8)[0]])
        domain.check_budget(DEFAULT_BUDGET, "infolb instance")
        slab = np.flatnonzero(domain.all_points()[:, -1] == 0)
        keys = src.uniform(1 << 62, slab.size)
        ones = slab[np.argsort(keys, kind="stable")[: slab.size // 2]]
        vals = np.zeros(domain.size, np.uint8)
        vals[ones] = 1
        return TruthTable(domain, vals), (Z, L)
    if kind == "querylb":
        if n % 4:
            raise ValueError("querylb needs n divisible by 4")
        if eps is not None:
            eps = Fraction(eps)
            if not 0.7 ** (d / n) < eps:
                raise ValueError("querylb needs 0.7^(d/n) < eps")
            if not n * eps < Fraction(1, 2):
                raise ValueError("querylb needs n * eps < 1/2")
        f = HeavyFlip(DirectSum.random(domain, src))
        return f, (f.planted, f.heavy_fraction())
    raise ValueError(f"unknown adversarial instance {kind!r}")


def dist_exact(f: BooleanFunction, g: BooleanFunction, budget: int = DEFAULT_BUDGET) -> Fraction:
    """Exact fraction of the domain where f and g disagree."""
    if f.domain != g.domain:
        raise ValueError("domain mismatch")
    f.domain.check_budget(budget, "distance")
    diff = np.count_nonzero(f.truth_table(budget) != g.truth_table(budget))
    return Fraction(int(diff), f.domain.size)


# --------------------------------------------------------------------------
# oracles


class OracleHandle:
    """Counts queries and optionally runs an online erasure adversary.

    After each answered query the ``strategy`` (if any) is shown the
    transcript and may erase up to ``t`` points; erased points answer ``None``
    from then on.
    """

    def __init__(self, f: BooleanFunction, t: int = 0, strategy: Callable | None = None):
        if t < 0:
            raise ValueError("erasure budget must be >= 0")
        self.f = f
        self.t = t
        self.strategy = strategy
        self.reset()

    @property
    def domain(self) -> GridDomain:
        return self.f.domain

    def reset(self) -> None:
        self.queries = 0
        self.transcript: list[tuple[int, ...]] = []
        self.erased: set[tuple[int, ...]] = set()

    def query(self, point) -> int | None:
        p = tuple(int(v) for v in point)
        if not self.domain.contains(p):
            raise ValueError(f"query {p} outside domain {self.domain.sizes}")
        self.queries += 1
        self.transcript.append(p)
        answer = None if p in self.erased else self.f(p)
        if self.strategy is not None and self.t > 0:
            chosen = list(self.strategy(self.transcript, self.t))[: self.t]
            self.erased.update(tuple(int(v) for v in q) for q in chosen)
        return answer

    __call__ = query


def _odd_one_out(values: Sequence[int]) -> int | None:
    counts: dict[int, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    odd = [v for v, c in counts.items() if c % 2]
    return odd[0] if len(odd) == 1 else None


def anticipate_fourth(transcript: Sequence[tuple[int, ...]], t: int):
    """Erase the query that completes the current 4-query check.

    In the Diamond and Square-in-Cube tests every coordinate of the four
    queries takes each of its values an even number of times, so after three
    queries the fourth is forced coordinate by coordinate.
    """
    if len(transcript) % 4 != 3:
        return []
    first, second, third = transcript[-3:]
    forced = []
    for vals in zip(first, second, third):
        v = _odd_one_out(vals)
        if v is None:
            return []
        forced.append(v)
    return [tuple(forced)]


STRATEGIES = {"anticipate-fourth": anticipate_fourth}


def erasure_wrap(f: BooleanFunction, t: int, strategy="anticipate-fourth") -> OracleHandle:
    if isinstance(strategy, str):
        strategy = STRATEGIES[strategy]
    return OracleHandle(f, t=t, strategy=strategy)


# --------------------------------------------------------------------------
# DSTT v1 truth-table files


def write_dstt(f: BooleanFunction, path) -> None:
    dom = f.domain
    if not dom.is_uniform:
        raise UnsupportedParameter("DSTT v1 stores uniform grids only")
    bits = "".join("1" if v else "0" for v in f.truth_table())
    Path(path).write_text(f"n={dom.n} d={dom.d}\n{bits}\n", encoding="ascii")


def read_dstt(path) -> TruthTable:
    text = Path(path).read_text(encoding="ascii")
    lines = text.split("\n")
    if len(lines) < 2:
        raise ValueError(f"{path}: expected a header line and a bit line")
    try:
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        n, d = int(header["n"]), int(header["d"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}:1: malformed header {lines[0]!r}") from exc
    bits = lines[1].strip()
    if len(bits) != n**d or set(bits) - {"0", "1"}:
        raise ValueError(f"{path}:2: expected {n**d} characters from {{0,1}}")
    return TruthTable(GridDomain.uniform(n, d), np.frombuffer(bits.encode(), np.uint8) - ord("0"))


# --------------------------------------------------------------------------
# vector-valued oracles for the direct product test


class DirectProduct:
    """``F(x) = (G_1(x_1), ..., G_d(x_d))`` with optional point overrides."""

    def __init__(self, tables: Sequence[Sequence[int]], overrides: dict | None = None):
        self.tables = tuple(tuple(int(v) for v in t) for t in tables)
        self.domain = GridDomain(tuple(len(t) for t in self.tables))
        self.overrides = {tuple(k): tuple(v) for k, v in (overrides or {}).items()}

    def __call__(self, point) -> tuple[int, ...]:
        p = tuple(int(v) for v in point)
        if p in self.overrides:
            return self.overrides[p]
        return tuple(t[v] for t, v in zip(self.tables, p))


def all_functions(domain: GridDomain, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Every truth table on ``domain`` as rows of a ``(2^N, N)`` array."""
    N = domain.size
    if (1 << N) * N > budget * 8:
        raise BudgetExceeded("function enumeration", 1 << N, budget)
    codes = np.arange(1 << N, dtype=np.int64)
    return ((codes[:, None] >> np.arange(N - 1, -1, -1)) & 1).astype(np.uint8)


def direct_sum_tables(domain: GridDomain, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Truth tables of every canonical direct sum, one per row."""
    total = DirectSum.count(domain)
    if total > budget:
        raise BudgetExceeded("direct-sum enumeration", total, budget)
    pts = domain.all_points(budget)
    out = np.empty((total, domain.size), np.uint8)
    for code in range(total):
        out[code] = DirectSum.from_bits(domain, code)._evaluate(pts)
    return out

