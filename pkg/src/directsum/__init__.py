"""Direct-sum property testing over grids [n]^d -> F2."""
from .decode import DecodeConfig, DecodeFailure, decode, fast_decode, shapka_vote
from .exact import (
    ExactValue,
    dist_even_or_odd,
    dist_to_direct_sum,
    dist_to_junta_degree,
    exact_rejection_probability,
    expected_restricted_distance,
    noise_stability,
    wht,
)
from .functions import (
    BooleanFunction,
    DirectSum,
    OracleHandle,
    TruthTable,
    adversarial_instance,
    corrupt,
    erasure_wrap,
    named,
    read_dstt,
    write_dstt,
)
from .grid import BitSource, BudgetExceeded, GridDomain, UnsupportedParameter, interpolate, noise_sample
from .harness import Estimate, ExperimentConfig, estimate_rejection, parse_function, randomness_report, run_experiment
from .testers import TestRun, Verdict, make_tester

__version__ = "0.1.0"
