import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from directsum.estimators import LocalDecoder, RejectionFeatures, WalshHadamardTransformer
from directsum.functions import DirectSum, all_functions, corrupt
from directsum.grid import BitSource, GridDomain


def test_rejection_features():
    X = all_functions(GridDomain.cube(2))
    est = RejectionFeatures(tests=("diamond", "square-in-cube", "blr-affinity"))
    out = est.fit_transform(X)
    assert out.shape == (16, 3)
    and2 = int(np.flatnonzero((X == [0, 0, 0, 1]).all(axis=1))[0])
    assert out[and2].tolist() == [1 / 8, 3 / 32, 3 / 8]
    assert list(est.get_feature_names_out()) == ["reject_diamond", "reject_square-in-cube", "reject_blr-affinity"]


def test_rejection_features_params_and_clone():
    est = RejectionFeatures(tests=("degree-k",), params={"k": 2})
    assert est.get_params()["params"] == {"k": 2}
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        twin.transform(np.zeros((1, 8)))


def test_rejection_features_shape_checks():
    est = RejectionFeatures(n=3).fit(np.zeros((2, 9), np.uint8))
    assert est.d_ == 2
    with pytest.raises(ValueError):
        est.transform(np.zeros((1, 27), np.uint8))
    with pytest.raises(ValueError):
        RejectionFeatures(n=3).fit(np.zeros((1, 10), np.uint8))


def test_wht_transformer_in_pipeline():
    X = all_functions(GridDomain.cube(3))
    spec = make_pipeline(WalshHadamardTransformer()).fit_transform(X)
    assert np.allclose((spec**2).sum(axis=1), 1)


def test_local_decoder():
    dom = GridDomain.uniform(3, 5)
    src = BitSource(0)
    L = DirectSum.random(dom, src)
    f = corrupt(L, count=6, src=src)
    X = dom.all_points()
    model = LocalDecoder(n=3, votes=31, seed=1).fit(X, f.truth_table())
    pts = X[::9]
    assert np.array_equal(model.predict(pts), L.evaluate(pts))
    assert model.score(pts, L.evaluate(pts)) == 1.0
    with pytest.raises(ValueError):
        LocalDecoder(n=3).fit(X[:-1], f.truth_table()[:-1])
