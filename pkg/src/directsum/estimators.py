"""scikit-learn compatible wrappers around the exact analysis and decoders.

Rows of ``X`` are truth tables in row-major order (last coordinate fastest),
except for :class:`LocalDecoder`, which learns from labelled grid points.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from . import exact
from .decode import DecodeConfig, decode
from .functions import TruthTable
from .grid import BitSource, GridDomain


def _infer_d(width: int, n: int) -> int:
    d = round(math.log(width, n)) if width > 1 else 0
    if n**d != width:
        raise ValueError(f"{width} columns is not a power of n={n}")
    return d


class RejectionFeatures(BaseEstimator, TransformerMixin):
    """Map truth tables to exact rejection probabilities, one column per test.

    Parameters
    ----------
    tests : tuple of str
        Test kinds, see :data:`directsum.testers.TESTERS`.
    n : int
        Alphabet size of the grid.
    params : dict or None
        Extra tester parameters shared by every test (``rho``, ``k``, ``inner``).
    """

    def __init__(self, tests=("diamond",), n=2, params=None):
        self.tests = tests
        self.n = n
        self.params = params

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.uint8, estimator=self)
        self.d_ = _infer_d(X.shape[1], self.n)
        self.domain_ = GridDomain.uniform(self.n, self.d_)
        self.plans_ = [exact.query_plan(t, self.domain_, **(self.params or {})) for t in self.tests]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "plans_")
        X = check_array(X, dtype=np.uint8, estimator=self)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"fitted on {self.n_features_in_} columns, got {X.shape[1]}")
        cols = []
        for plan in self.plans_:
            w = plan.reject_weights([X] * len(set(plan.slots)))
            cols.append(np.asarray(w, dtype=float) / plan.denominator)
        return np.stack(cols, axis=1)

    def get_feature_names_out(self, input_features=None):
        return np.asarray([f"reject_{t}" for t in self.tests], dtype=object)


class WalshHadamardTransformer(BaseEstimator, TransformerMixin):
    """Fourier coefficients of ``(-1)^f`` for hypercube truth tables."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.uint8, estimator=self)
        self.d_ = _infer_d(X.shape[1], 2)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "d_")
        X = check_array(X, dtype=np.uint8, estimator=self)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"fitted on {self.n_features_in_} columns, got {X.shape[1]}")
        return exact.spectra(X).astype(float) / X.shape[1]


class LocalDecoder(BaseEstimator, ClassifierMixin):
    """Predict the nearest direct sum's value by local voting.

    ``fit`` takes every grid point with its (possibly corrupted) label;
    ``predict`` decodes each requested point with an independent vote.
    """

    def __init__(self, n=3, scheme="fast", votes=101, seed=0):
        self.n = n
        self.scheme = scheme
        self.votes = votes
        self.seed = seed

    def fit(self, X, y):
        X = check_array(X, dtype=np.int64, estimator=self)
        y = np.asarray(y, dtype=np.uint8).reshape(-1)
        if len(y) != len(X):
            raise ValueError("X and y have different lengths")
        self.domain_ = GridDomain.uniform(self.n, X.shape[1])
        table = np.full(self.domain_.size, 255, dtype=np.uint8)
        table[self.domain_.index(self.domain_.validate(X))] = y
        if np.any(table == 255):
            raise ValueError("training points must cover the whole grid")
        self.oracle_ = TruthTable(self.domain_, table)
        self.config_ = DecodeConfig(votes=self.votes, scheme=self.scheme)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "oracle_")
        X = check_array(X, dtype=np.int64, estimator=self)
        src = BitSource(self.seed)
        return np.array([decode(self.oracle_, tuple(int(v) for v in p), src, self.config_) for p in X], dtype=np.uint8)
