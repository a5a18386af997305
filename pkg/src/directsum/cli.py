"""Command-line entry point: ``directsum <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import exact
from .decode import DecodeConfig, DecodeFailure, decode
from .functions import erasure_wrap, read_dstt
from .grid import BitSource, BudgetExceeded, UnsupportedParameter
from .harness import (
    ConfigError,
    default_seed,
    estimate_rejection,
    load_config,
    parse_function,
    randomness_report,
    render_rows,
    run_experiment,
)
from .testers import TESTERS

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3


def _tester_params(args) -> dict:
    params = {}
    if getattr(args, "rho", None) is not None:
        params["rho"] = args.rho
    if getattr(args, "k", None) is not None:
        params["k"] = args.k
    if getattr(args, "inner", None) is not None:
        params["inner"] = args.inner
    return params


def _add_tester_options(p):
    p.add_argument("test", choices=sorted(TESTERS))
    p.add_argument("function", help="family:param,...[+corrupt:rate@seed]")
    p.add_argument("--rho", type=Fraction, help="noise correlation for the diamond test, e.g. -1/2")
    p.add_argument("--k", type=int, help="degree for degree-k")
    p.add_argument("--inner", help="inner test for affine-on-subcube")


def cmd_exact(args) -> int:
    f = parse_function(args.function)
    value = exact.exact_rejection_probability(args.test, f, **_tester_params(args))
    print(f"{value.numerator}/{value.denominator}\t{float(value):.10g}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    f = parse_function(args.function)
    oracle = erasure_wrap(f, args.erasure) if args.erasure else f
    est = estimate_rejection(args.test, oracle, args.samples, args.seed, **_tester_params(args))
    lo, hi = est.interval
    print(f"estimate {est.estimate:.6f}")
    print(f"ci99 [{lo:.6f}, {hi:.6f}] half-width {est.half_width:.6f}")
    print(f"void-rate {est.void_rate:.6f}")
    print(f"samples {est.samples} seed {est.seed}")
    return EXIT_OK


def cmd_bits(args) -> int:
    rep = randomness_report(args.test, args.n, args.d, args.samples, args.seed)
    print(f"mean-bits {rep.mean:.4f} ± {rep.half_width:.4f}")
    print(f"closed-form {float(rep.expected):.4f} ({rep.expected})")
    print(f"relative-error {rep.relative_error:.5f}")
    return EXIT_OK


def cmd_fourier(args) -> int:
    f = read_dstt(args.file)
    spec = exact.wht(f)
    dist, _ = exact.dist_to_direct_sum(f, method="fourier")
    report = {
        "spectrum": {",".join(map(str, s)) or "{}": str(c) for s, c in spec.items() if c},
        "max_coefficient": str(spec.max_abs()),
        "argmax": list(spec.subset(spec.argmax_abs())),
        "dist_to_affine": str(dist),
        "even_or_odd_distance": str(exact.dist_even_or_odd(f)),
        "noise_stability": str(exact.noise_stability(f, args.rho)),
    }
    if args.json:
        print(json.dumps(report, indent=2))
        return EXIT_OK
    for subset, c in report["spectrum"].items():
        print(f"S={{{subset.strip('{}')}}}\t{c}")
    for key in ("max_coefficient", "dist_to_affine", "even_or_odd_distance", "noise_stability"):
        print(f"{key} {report[key]}")
    return EXIT_OK


def cmd_decode(args) -> int:
    f = parse_function(args.function)
    point = tuple(int(v) for v in args.point.split(","))
    bit = decode(f, point, BitSource(args.seed), DecodeConfig(votes=args.votes, scheme=args.scheme))
    print(bit)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    if args.output:
        config.output = args.output
    if args.workers:
        config.workers = args.workers
    rows = run_experiment(config)
    if not config.output:
        sys.stdout.write(render_rows(rows, config.format))
    else:
        print(f"wrote {len(rows)} rows to {config.output}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="directsum", description="Direct-sum testers over grids [n]^d -> F2.")
    sub = parser.add_subparsers(dest="command", required=True)
    seed_default = default_seed()

    p = sub.add_parser("exact", help="exact rejection probability by enumeration")
    _add_tester_options(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("estimate", help="Monte Carlo rejection estimate with a 99%% interval")
    _add_tester_options(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=seed_default)
    p.add_argument("--erasure", type=int, default=0, metavar="T", help="anticipate-fourth erasures per query")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bits", help="mean random bits of the lazy samplers")
    p.add_argument("test", choices=["square-in-cube", "diamond", "diamond-in-cube"])
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-d", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=seed_default)
    p.set_defaults(func=cmd_bits)

    p = sub.add_parser("fourier", help="spectral report for a hypercube truth table")
    p.add_argument("file")
    p.add_argument("--rho", type=Fraction, default=Fraction(1, 2))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fourier)

    p = sub.add_parser("decode", help="locally correct one point")
    p.add_argument("scheme", choices=["fast", "shapka"])
    p.add_argument("function")
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--votes", type=int, default=101)
    p.add_argument("--seed", type=int, default=seed_default)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="run an experiment config (JSON)")
    p.add_argument("config")
    p.add_argument("--output")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
    except ValueError:
        print("error: invalid DIRECTSUM_SEED", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, UnsupportedParameter, DecodeFailure, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
