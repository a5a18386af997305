"""Local correction: recover the nearest direct sum's value at a point by
majority over randomized votes."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .functions import BooleanFunction, OracleHandle
from .grid import BitSource, GridDomain


class DecodeFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class DecodeConfig:
    votes: int = 101
    scheme: str = "fast"

    def __post_init__(self):
        if self.votes < 1 or self.votes % 2 == 0:
            raise ValueError("votes must be a positive odd integer")
        if self.scheme not in ("shapka", "fast"):
            raise ValueError("scheme must be 'shapka' or 'fast'")


def shapka_vote_points(domain: GridDomain, b, m: int, src: BitSource) -> np.ndarray:
    """Query points of m Shapka votes at b, shape ``(m, d [+1], d)``.

    Vote j queries the d one-coordinate hybrids of a fresh uniform a toward
    b (and a itself when d is even).
    """
    b = np.asarray(domain.validate(b))
    d = domain.d
    a = src.point(domain, m)
    hyb = np.repeat(a[:, None, :], d, axis=1)
    diag = np.arange(d)
    hyb[:, diag, diag] = b[diag]
    if d % 2 == 0:
        hyb = np.concatenate([hyb, a[:, None, :]], axis=1)
    return hyb


def fast_vote_points(domain: GridDomain, b, m: int, src: BitSource) -> np.ndarray:
    """Query points of m partition votes at b, shape ``(m, parts, d)``.

    Coordinates are split uniformly into ``n`` parts (``n + 1`` for even n).
    Query i copies b on part i and a shared filler R elsewhere.  R avoids
    ``b_j`` for odd n; for even n it equals ``b_j`` with probability ``1/n^2``.
    Each query is then marginally uniform on the grid.
    """
    if not domain.is_uniform:
        raise ValueError("partition votes need a uniform alphabet")
    b = np.asarray(domain.validate(b))
    n, d = domain.n, domain.d
    parts = n if n % 2 else n + 1
    part = src.uniform(parts, (m, d))
    shift = src.uniform(n - 1, (m, d))
    R = shift + (shift >= b[None, :])
    if n % 2 == 0:
        keep = src.bernoulli(Fraction(1, n * n), (m, d)).astype(bool)
        R = np.where(keep, b[None, :], R)
    pts = np.where(part[:, None, :] == np.arange(parts)[None, :, None], b[None, None, :], R[:, None, :])
    return pts


def _majority(values: list[int | None]) -> int:
    cast = [v for v in values if v is not None]
    if not cast:
        raise DecodeFailure("every vote hit an erased point")
    ones = sum(cast)
    zeros = len(cast) - ones
    if ones == zeros:
        raise DecodeFailure("tied vote")
    return int(ones > zeros)


def _tally(oracle, pts: np.ndarray) -> int:
    if isinstance(oracle, OracleHandle):
        votes = []
        for vote in pts:
            answers = [oracle.query(p) for p in vote]
            votes.append(None if any(a is None for a in answers) else sum(answers) % 2)
        return _majority(votes)
    if not isinstance(oracle, BooleanFunction):
        raise TypeError("oracle must be a BooleanFunction or OracleHandle")
    votes = np.bitwise_xor.reduce(oracle.evaluate(pts), axis=1)
    return _majority(votes.tolist())


def shapka_vote(oracle, b, m: int, src: BitSource) -> int:
    """Majority of m Shapka votes ``sum_i f(phi_{e_i}(a, b))`` for fresh a."""
    if m < 1 or m % 2 == 0:
        raise ValueError("votes must be a positive odd integer")
    domain = oracle.domain
    if domain.d % 2 == 0:
        warnings.warn("Shapka decoding with even d is experimental", stacklevel=2)
    return _tally(oracle, shapka_vote_points(domain, b, m, src))


def fast_decode(oracle, b, m: int, src: BitSource) -> int:
    """Majority of m partition votes (n queries per vote, n + 1 for even n)."""
    if m < 1 or m % 2 == 0:
        raise ValueError("votes must be a positive odd integer")
    return _tally(oracle, fast_vote_points(oracle.domain, b, m, src))


def decode(oracle, b, src: BitSource, config: DecodeConfig = DecodeConfig()) -> int:
    fn = fast_decode if config.scheme == "fast" else shapka_vote
    return fn(oracle, b, config.votes, src)


def queries_per_vote(domain: GridDomain, scheme: str) -> int:
    if scheme == "shapka":
        return domain.d + (domain.d % 2 == 0)
    n = domain.n
    return n if n % 2 else n + 1
