"""Monte Carlo estimation, randomness reports and experiment sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import exact
from .functions import (
    BooleanFunction,
    Constant,
    DirectSum,
    OracleHandle,
    Parity,
    RandomFunction,
    Dictator,
    adversarial_instance,
    corrupt,
    named,
    read_dstt,
)
from .grid import BitSource, BudgetExceeded, GridDomain
from .testers import ACCOUNTED, Verdict, expected_bits, make_tester

SEED_ENV = "DIRECTSUM_SEED"
CONFIDENCE = 0.99


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def hoeffding_halfwidth(samples: int, confidence: float = CONFIDENCE) -> float:
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * samples))


class ConfigError(ValueError):
    pass


@dataclass
class Estimate:
    estimate: float
    samples: int
    half_width: float
    seed: int
    void_rate: float = 0.0
    bits_mean: float | None = None

    @property
    def interval(self) -> tuple[float, float]:
        return max(0.0, self.estimate - self.half_width), min(1.0, self.estimate + self.half_width)

    def contains(self, value) -> bool:
        lo, hi = self.estimate - self.half_width, self.estimate + self.half_width
        return lo <= float(value) <= hi

    def __str__(self):
        return f"{self.estimate:.6f} ± {self.half_width:.6f} (n={self.samples}, void={self.void_rate:.4f})"


def estimate_rejection(test_kind, oracle, samples: int, seed: int | None = None, **params) -> Estimate:
    """Rejection rate over i.i.d. tester runs with a 99% Hoeffding interval.

    Plain functions go through the vectorized simulator.  An
    :class:`OracleHandle` is run query by query (reset between runs) so an
    erasure adversary can act; Void runs are reported as ``void_rate``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    seed = default_seed() if seed is None else seed
    tester = make_tester(test_kind, **params)
    src = BitSource(seed)
    funcs = tuple(oracle) if isinstance(oracle, (tuple, list)) else (oracle,)
    if len(funcs) == 1 and tester.n_functions > 1:
        funcs = funcs * tester.n_functions
    rejects = voids = 0
    if any(isinstance(f, OracleHandle) for f in funcs):
        for _ in range(samples):
            for f in funcs:
                if isinstance(f, OracleHandle):
                    f.reset()
            run = tester.run(*funcs, src=src)
            rejects += run.verdict is Verdict.REJECT
            voids += run.verdict is Verdict.VOID
    else:
        rejects = int(tester.simulate(funcs, src, samples).sum())
    return Estimate(
        estimate=rejects / samples,
        samples=samples,
        half_width=hoeffding_halfwidth(samples),
        seed=seed,
        void_rate=voids / samples,
        bits_mean=src.bits_consumed / samples,
    )


@dataclass
class BitsReport:
    test: str
    n: int
    d: int
    samples: int
    mean: float
    half_width: float
    expected: Fraction

    @property
    def relative_error(self) -> float:
        return abs(self.mean - float(self.expected)) / float(self.expected)


def randomness_report(test_kind: str, n: int, d: int, samples: int, seed: int | None = None, batches: int = 100) -> BitsReport:
    """Mean bits per query tuple of the lazy samplers.

    The interval is a 99% normal interval over ``batches`` batch means.
    """
    seed = default_seed() if seed is None else seed
    expected = expected_bits(test_kind, n, d)
    tester = ACCOUNTED[test_kind]()
    domain = GridDomain.uniform(n, d)
    src = BitSource(seed)
    batches = max(2, min(batches, samples))
    sizes = [samples // batches + (i < samples % batches) for i in range(batches)]
    means = []
    for size in sizes:
        before = src.bits_consumed
        tester.draw(domain, src, size)
        means.append((src.bits_consumed - before) / size)
    means = np.asarray(means)
    total_mean = float(np.average(means, weights=sizes))
    hw = 2.5758 * float(means.std(ddof=1)) / math.sqrt(batches)
    return BitsReport(test_kind, n, d, samples, total_mean, hw, expected)


# ---------------------------------------------------------------------------
# function specs


class FunctionSpecError(ConfigError):
    pass


def _params(text: str) -> dict:
    out = {}
    for tok in filter(None, (t.strip() for t in text.split(","))):
        if "=" not in tok:
            raise FunctionSpecError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        try:
            out[k.strip()] = int(v)
        except ValueError:
            raise FunctionSpecError(f"parameter {k!r} must be an integer, got {v!r}") from None
    return out


def parse_function(spec: str) -> BooleanFunction:
    """Build a function from ``family:param,...[+corrupt:rate@seed]``.

    Families: majority, parity, and, dictator, const, random, ds, infolb,
    querylb, file.  Examples: ``majority:d=7``,
    ``ds:n=3,d=9,seed=4+corrupt:0.05@11``, ``file:path.dstt``.
    """
    base, corruption = spec, None
    if "+corrupt:" in spec:
        base, corruption = spec.rsplit("+corrupt:", 1)
    if ":" not in base:
        raise FunctionSpecError(f"function spec {spec!r} lacks 'family:'")
    family, rest = base.split(":", 1)
    family = family.strip()
    if family == "file":
        try:
            f = read_dstt(rest)
        except OSError as exc:
            raise FunctionSpecError(f"cannot read {rest!r}: {exc}") from None
    else:
        p = _params(rest)
        try:
            f = _build(family, p)
        except KeyError as exc:
            raise FunctionSpecError(f"{family}: missing parameter {exc.args[0]!r}") from None
    if corruption is not None:
        try:
            rate, cseed = corruption.split("@", 1)
            f = corrupt(f, Fraction(rate), BitSource(int(cseed)))
        except ValueError as exc:
            raise FunctionSpecError(f"bad corruption clause {corruption!r}: {exc}") from None
    return f


def _build(family: str, p: dict) -> BooleanFunction:
    n = p.get("n", 2)
    if family == "majority":
        return named("majority", GridDomain.cube(p["d"]))
    if family == "and":
        return named("and", GridDomain.cube(p["d"]))
    if family == "parity":
        return Parity(GridDomain.uniform(n, p["d"]))
    if family == "dictator":
        return Dictator(GridDomain.cube(p["d"]), p.get("i", 0))
    if family == "const":
        return Constant(GridDomain.uniform(n, p["d"]), p.get("value", 0))
    if family == "random":
        return RandomFunction(GridDomain.uniform(n, p["d"]), p["seed"])
    if family == "ds":
        return DirectSum.random(GridDomain.uniform(n, p["d"]), BitSource(p.get("seed", 0)))
    if family in ("infolb", "querylb"):
        f, _ = adversarial_instance(family, GridDomain.uniform(n, p["d"]), BitSource(p.get("seed", 0)))
        return f
    raise FunctionSpecError(f"unknown function family {family!r}")


def family_of(spec: str) -> str:
    return spec.split(":", 1)[0]


# ---------------------------------------------------------------------------
# experiments

FIELDS = ["test", "family", "n", "d", "mode", "rejection", "ci_halfwidth", "dist_to_class", "ratio", "bits_mean", "seed"]


@dataclass
class ExperimentConfig:
    tests: list = field(default_factory=lambda: ["diamond"])
    functions: list = field(default_factory=list)
    mode: str = "exact"
    samples: int = 100_000
    seed: int = 0
    params: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.tests, str):
            self.tests = [self.tests]
        if isinstance(self.functions, str):
            self.functions = [self.functions]
        if self.mode not in ("exact", "montecarlo"):
            raise ConfigError(f"field 'mode': expected 'exact' or 'montecarlo', got {self.mode!r}")
        if self.format not in ("csv", "jsonl"):
            raise ConfigError(f"field 'format': expected 'csv' or 'jsonl', got {self.format!r}")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise ConfigError("field 'samples': must be a positive integer")
        if not self.functions:
            raise ConfigError("field 'functions': at least one function spec is required")
        for t in self.tests:
            try:
                make_tester(t, **self.params)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"field 'tests': {exc}") from None

    def cells(self) -> list[tuple[str, str]]:
        return [(fn, t) for fn in self.functions for t in self.tests]


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if "test" in raw:
        raw["tests"] = raw.pop("test")
    if "function" in raw:
        raw["functions"] = raw.pop("function")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown field {unknown[0]!r}")
    try:
        return ExperimentConfig(**raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _fmt(v) -> str:
    if v is None or v == "":
        return ""
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dist_to_class(test_kind: str, f: BooleanFunction, params: dict):
    if test_kind == "degree-k":
        return exact.dist_to_junta_degree(f, params.get("k", 1))
    if test_kind == "blr-linearity":
        spec = exact.wht(f)
        return (1 - Fraction(int(max(spec.numerators)), spec.denominator)) / 2
    return exact.dist_to_direct_sum(f)[0]


def run_cell(config: ExperimentConfig, index: int, spec: str, test_kind: str) -> dict:
    seed = int(np.random.SeedSequence([config.seed, index]).generate_state(1, np.uint64)[0] >> 1)
    f = parse_function(spec)
    dom = f.domain
    row = {k: "" for k in FIELDS}
    row.update(test=test_kind, family=family_of(spec), n=dom.n, d=dom.d, mode=config.mode, seed=seed)
    if config.mode == "exact":
        rej = exact.exact_rejection_probability(test_kind, f, **config.params)
        row["rejection"] = Fraction(rej)
    else:
        est = estimate_rejection(test_kind, f, config.samples, seed, **config.params)
        rej = est.estimate
        row.update(rejection=est.estimate, ci_halfwidth=est.half_width, bits_mean=est.bits_mean)
    try:
        dist = dist_to_class(test_kind, f, config.params)
    except (BudgetExceeded, ValueError):
        dist = None
    if dist is not None:
        row["dist_to_class"] = Fraction(dist)
        if rej:
            row["ratio"] = Fraction(dist) / rej if config.mode == "exact" else float(dist) / rej
    return {k: _fmt(v) for k, v in row.items()}


def run_experiment(config: ExperimentConfig) -> list[dict]:
    """One row per (function, test) cell, ordered by cell index."""
    cells = config.cells()
    with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
        rows = list(pool.map(lambda ic: run_cell(config, ic[0], *ic[1]), enumerate(cells)))
    if config.output:
        write_rows(rows, config.output, config.format)
    return rows


def render_rows(rows: Sequence[dict], fmt: str = "csv") -> str:
    buf = io.StringIO(newline="")
    if fmt == "csv":
        writer = csv.DictWriter(buf, fieldnames=FIELDS)
        writer.writeheader()
        writer.writerows(rows)
    else:
        for row in rows:
            buf.write(json.dumps({k: row[k] for k in FIELDS}) + "\n")
    return buf.getvalue()


def write_rows(rows: Sequence[dict], path, fmt: str = "csv") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(render_rows(rows, fmt))


__all__ = [
    "Estimate",
    "BitsReport",
    "ExperimentConfig",
    "ConfigError",
    "FunctionSpecError",
    "estimate_rejection",
    "randomness_report",
    "run_experiment",
    "load_config",
    "parse_function",
    "asdict",
]
