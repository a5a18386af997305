"""Grid domains, interpolation, correlated sampling and instrumented randomness.

Alphabets are 0-indexed: coordinate ``i`` ranges over ``{0, ..., n_i - 1}``.
Points are plain tuples of ints; batches of points are integer arrays whose
last axis has length ``d``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

DEFAULT_BUDGET = 1 << 22

FIX0, FIX1, FREE = 0, 1, None


class BudgetExceeded(RuntimeError):
    """An exact operation would need more work than the allowed budget."""

    def __init__(self, what: str, required: int, budget: int):
        self.what = what
        self.required = required
        self.budget = budget
        super().__init__(f"{what}: needs {required} > budget {budget}")


class UnsupportedParameter(ValueError):
    pass


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class GridDomain:
    """The product grid ``[n_1] x ... x [n_d]``."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if any(s < 2 for s in sizes):
            raise ValueError(f"every alphabet size must be >= 2, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def uniform(cls, n: int, d: int) -> "GridDomain":
        if d < 1:
            raise ValueError("d must be >= 1")
        return cls((n,) * d)

    @classmethod
    def cube(cls, d: int) -> "GridDomain":
        return cls.uniform(2, d)

    @property
    def d(self) -> int:
        return len(self.sizes)

    @property
    def size(self) -> int:
        return math.prod(self.sizes)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.sizes)) <= 1

    @property
    def n(self) -> int:
        if not self.is_uniform:
            raise UnsupportedParameter(f"mixed-radix domain {self.sizes} has no single n")
        return self.sizes[0] if self.sizes else 2

    @property
    def is_cube(self) -> bool:
        return all(s == 2 for s in self.sizes)

    @property
    def strides(self) -> np.ndarray:
        # row-major, last coordinate fastest
        out = np.ones(self.d, dtype=np.int64)
        for i in range(self.d - 2, -1, -1):
            out[i] = out[i + 1] * self.sizes[i + 1]
        return out

    def check_budget(self, budget: int = DEFAULT_BUDGET, what: str = "grid enumeration") -> None:
        if self.size > budget:
            raise BudgetExceeded(what, self.size, budget)

    def index(self, points) -> np.ndarray | int:
        """Flat row-major index of one point or of a batch of points."""
        pts = np.asarray(points, dtype=np.int64)
        if pts.shape[-1:] != (self.d,):
            raise ValueError(f"points must have last axis {self.d}, got shape {pts.shape}")
        if self.d == 0:
            out = np.zeros(pts.shape[:-1], dtype=np.int64)
        else:
            out = pts @ self.strides
        return int(out) if out.ndim == 0 else out

    def unindex(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return np.stack(np.unravel_index(idx, self.sizes), axis=-1) if self.d else np.zeros(idx.shape + (0,), np.int64)

    def all_points(self, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        self.check_budget(budget)
        return self.unindex(np.arange(self.size))

    def contains(self, point: Sequence[int]) -> bool:
        return len(point) == self.d and all(0 <= int(v) < s for v, s in zip(point, self.sizes))

    def validate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64)
        if pts.shape[-1:] != (self.d,):
            raise ValueError(f"dimension mismatch: expected d={self.d}, got shape {pts.shape}")
        if pts.size and (np.any(pts < 0) or np.any(pts >= np.asarray(self.sizes))):
            raise ValueError("coordinate out of range for domain %s" % (self.sizes,))
        return pts


def point_domain(d: int) -> GridDomain:
    """The zero-dimensional domain (a single point); only produced by restrictions."""
    if d != 0:
        raise ValueError("use GridDomain.uniform for d >= 1")
    return GridDomain(())


def interpolate(a, b, x):
    """Take ``a_i`` where ``x_i = 0`` and ``b_i`` where ``x_i = 1``.

    Works on single points (returns a tuple) and on broadcastable batches
    (returns an array).
    """
    a_arr, b_arr, x_arr = (np.asarray(v, dtype=np.int64) for v in (a, b, x))
    if not (a_arr.shape[-1:] == b_arr.shape[-1:] == x_arr.shape[-1:]):
        raise ValueError("interpolate: a, b and x must share dimension d")
    if x_arr.size and np.any((x_arr != 0) & (x_arr != 1)):
        raise ValueError("interpolate: mask entries must be 0 or 1")
    out = np.where(x_arr == 1, b_arr, a_arr)
    if a_arr.ndim == b_arr.ndim == x_arr.ndim == 1:
        return tuple(int(v) for v in out)
    return out


def complement(x):
    """``x + 1`` over F_2 (flip every mask bit)."""
    arr = 1 - np.asarray(x, dtype=np.int64)
    return tuple(int(v) for v in arr) if arr.ndim == 1 else arr


class BitSource:
    """Seeded stream of raw random bits with an exact consumption counter.

    Every draw is built from raw bits pulled through :meth:`bits`, so
    ``bits_consumed`` is the true number of coin flips used.  Alphabet draws
    for a power-of-two ``n`` cost exactly ``log2 n`` bits; other alphabets
    fall back to rejection sampling (counted, but variable).
    """

    def __init__(self, seed: int | None = None):
        if seed is None:
            seed = int(np.random.SeedSequence().entropy) & ((1 << 64) - 1)
        self.seed = int(seed) & ((1 << 64) - 1)
        self._rng = np.random.Generator(np.random.PCG64(self.seed))
        self.bits_consumed = 0

    def __repr__(self):
        return f"BitSource(seed={self.seed}, bits_consumed={self.bits_consumed})"

    def spawn(self, key: int) -> "BitSource":
        """Independent child source, deterministic in (seed, key)."""
        ss = np.random.SeedSequence([self.seed, int(key)])
        return BitSource(int(ss.generate_state(1, np.uint64)[0]))

    def _raw(self, count: int) -> np.ndarray:
        raw = np.frombuffer(self._rng.bytes((count + 7) // 8), dtype=np.uint8)
        return np.unpackbits(raw)[:count]

    def bits(self, size=None) -> np.ndarray:
        shape = () if size is None else (size if isinstance(size, tuple) else (int(size),))
        count = math.prod(shape)
        self.bits_consumed += count
        if count == 0:
            return np.zeros(shape, dtype=np.int64)
        return self._raw(count).astype(np.int64).reshape(shape)

    @staticmethod
    def _combine(bits: np.ndarray) -> np.ndarray:
        out = np.zeros(bits.shape[0], dtype=np.int64)
        for j in range(bits.shape[1]):
            out = (out << 1) | bits[:, j]
        return out

    def uniform(self, n: int, size=None) -> np.ndarray:
        """Uniform draws from ``{0, ..., n-1}``."""
        shape = () if size is None else (size if isinstance(size, tuple) else (int(size),))
        count = math.prod(shape)
        if n < 1:
            raise ValueError("alphabet size must be positive")
        if n == 1 or count == 0:
            return np.zeros(shape, dtype=np.int64)
        k = (n - 1).bit_length()
        if is_power_of_two(n):
            self.bits_consumed += count * k
            return self._combine(self._raw(count * k).reshape(count, k)).reshape(shape)
        # rejection sampling in batches; only candidates up to the last
        # accepted one are charged
        out = np.empty(count, dtype=np.int64)
        filled = 0
        while filled < count:
            need = count - filled
            m = int(need * (1 << k) / n * 1.05) + 16
            vals = self._combine(self._raw(m * k).reshape(m, k))
            ok = np.flatnonzero(vals < n)
            take = ok[:need]
            out[filled : filled + take.size] = vals[take]
            filled += take.size
            used = int(take[-1]) + 1 if take.size == need else m
            self.bits_consumed += used * k
        return out.reshape(shape)

    def bernoulli(self, p, size=None) -> np.ndarray:
        """Exact ``Pr[1] = p`` via lazy comparison with p's binary expansion.

        Costs 2 bits in expectation regardless of p; p = 0 or 1 costs nothing.
        """
        shape = () if size is None else (size if isinstance(size, tuple) else (int(size),))
        count = math.prod(shape)
        p = Fraction(p)
        if not 0 <= p <= 1:
            raise ValueError(f"probability out of range: {p}")
        if p == 0 or p == 1 or count == 0:
            return np.full(shape, int(p == 1), dtype=np.int64)
        out = np.zeros(count, dtype=np.int64)
        pending = np.arange(count)
        rest = p
        for _ in range(128):
            rest *= 2
            digit = int(rest >= 1)
            rest -= digit
            u = self.bits(pending.size)
            out[pending[u < digit]] = 1
            pending = pending[u == digit]
            if not pending.size:
                break
        return out.reshape(shape)

    def mask(self, d: int, size=None) -> np.ndarray:
        shape = (d,) if size is None else (int(size), d)
        return self.bits(shape)

    def point(self, domain: GridDomain, size=None) -> np.ndarray:
        """Uniform grid point(s); shape ``(d,)`` or ``(size, d)``."""
        rows = 1 if size is None else int(size)
        cols = []
        for n_i in domain.sizes:
            cols.append(self.uniform(n_i, rows))
        out = np.stack(cols, axis=-1) if cols else np.zeros((rows, 0), np.int64)
        return out[0] if size is None else out


def _check_correlation(domain: GridDomain, p) -> Fraction:
    p = Fraction(p)
    if not -1 < p < 1:
        raise ValueError(f"correlation must lie in the open interval (-1, 1), got {p}")
    if p < 0 and not domain.is_cube:
        raise UnsupportedParameter("negative correlation is only defined on the hypercube (n = 2)")
    return p


def noise_sample(x, p, src: BitSource, domain: GridDomain | None = None, lazy: bool = False) -> np.ndarray:
    """Draw ``y ~ T_p(x)`` coordinate-wise.

    ``p >= 0``: keep ``x_i`` with probability p, else resample uniformly.
    ``p < 0`` (hypercube only): set ``y_i = x_i + 1`` with probability ``|p|``,
    else resample uniformly.

    ``lazy=True`` draws the agreement event directly (probability
    ``p + (1-p)/n``) and only then a value from the other ``n - 1`` symbols;
    the law is the same.
    """
    xs = np.asarray(x, dtype=np.int64)
    if domain is None:
        domain = GridDomain.cube(xs.shape[-1])
    p = _check_correlation(domain, p)
    flat = xs.reshape(-1, domain.d)
    out = flat.copy()
    for i, n_i in enumerate(domain.sizes):
        col = flat[:, i]
        if lazy:
            if p >= 0:
                agree = src.bernoulli(p + (1 - p) / n_i, col.size).astype(bool)
                other = ~agree
                u = src.uniform(n_i - 1, int(other.sum()))
                out[other, i] = u + (u >= col[other])
            else:
                flip = src.bernoulli(-p + (1 + p) / 2, col.size).astype(bool)
                out[flip, i] = 1 - col[flip]
            continue
        if p >= 0:
            keep = src.bernoulli(p, col.size).astype(bool)
            fresh = ~keep
            out[fresh, i] = src.uniform(n_i, int(fresh.sum()))
        else:
            flip = src.bernoulli(-p, col.size).astype(bool)
            out[flip, i] = 1 - col[flip]
            fresh = ~flip
            out[fresh, i] = src.uniform(2, int(fresh.sum()))
    return out.reshape(xs.shape)


def agreement_correlation(n: int, agree: Fraction = Fraction(3, 4)) -> Fraction:
    """The p with ``Pr[y_i = x_i] = agree`` under ``T_p`` on an n-ary alphabet."""
    agree = Fraction(agree)
    return (n * agree - 1) / (n - 1)


@dataclass(frozen=True)
class RestrictionPattern:
    """Per-coordinate action: ``0`` / ``1`` fix the coordinate, ``None`` leaves it free."""

    actions: tuple

    def __post_init__(self):
        if any(a not in (FIX0, FIX1, FREE) for a in self.actions):
            raise ValueError("restriction actions must be 0, 1 or None")

    @property
    def d(self) -> int:
        return len(self.actions)

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.actions) if a is FREE)

    @property
    def weight(self) -> Fraction:
        n_free = len(self.free)
        return Fraction(1, 4) ** (self.d - n_free) * Fraction(1, 2) ** n_free

    @classmethod
    def all(cls, d: int) -> Iterable["RestrictionPattern"]:
        for acts in itertools.product((FIX0, FIX1, FREE), repeat=d):
            yield cls(acts)


def restriction_sample(d: int, src: BitSource) -> RestrictionPattern:
    """Fix to 0 / fix to 1 / leave free with probabilities 1/4, 1/4, 1/2."""
    acts = []
    for _ in range(d):
        if int(src.bits()):
            acts.append(FREE)
        else:
            acts.append(int(src.bits()))
    return RestrictionPattern(tuple(acts))


def restriction_apply(f, r: RestrictionPattern):
    """Restrict an n = 2 function to the subcube selected by ``r``."""
    from .functions import TruthTable

    dom = f.domain
    if not dom.is_cube:
        raise UnsupportedParameter("restrictions are defined for n = 2 functions only")
    if r.d != dom.d:
        raise ValueError("pattern dimension does not match function")
    table = f.truth_table().reshape((2,) * dom.d)
    index = tuple(slice(None) if a is FREE else a for a in r.actions)
    sub = np.ascontiguousarray(table[index]).reshape(-1)
    k = len(r.free)
    return TruthTable(GridDomain((2,) * k) if k else point_domain(0), sub)
