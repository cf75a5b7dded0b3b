"""Estimator facade: sklearn conventions over the prototype core."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from protoseg import ProtoSegmenter, ShapeMismatchError


def separable_matrix(n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 2))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    X[y == 1] += 4.0
    return X, y


def test_get_set_params_roundtrip():
    est = ProtoSegmenter(num_classes=3, soft_labels=True)
    params = est.get_params()
    assert params == {"num_classes": 3, "soft_labels": True}
    est.set_params(num_classes=None)
    assert est.num_classes is None
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_fit_returns_self_and_sets_attributes():
    X, y = separable_matrix()
    est = ProtoSegmenter()
    assert est.fit(X, y) is est
    assert est.prototypes_.shape == (2, 2)
    assert est.member_counts_.sum() == len(y)
    assert est.n_channels_ == 2
    assert est.n_classes_ == 2


def test_predict_before_fit_raises():
    with pytest.raises(NotFittedError):
        ProtoSegmenter().predict(np.zeros((3, 2)))


def test_matrix_predict_recovers_separable_labels():
    X, y = separable_matrix()
    est = ProtoSegmenter().fit(X, y)
    pred = est.predict(X)
    assert pred.shape == y.shape
    assert np.mean(pred == y) > 0.95
    assert est.score(X, y) > 0.95


def test_predict_proba_rows_sum_to_one():
    X, y = separable_matrix()
    proba = ProtoSegmenter().fit(X, y).predict_proba(X)
    assert proba.shape == (len(y), 2)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-12)


def test_image_input_shapes():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 2, size=(6, 6))
    y.flat[0] = 0
    y.flat[-1] = 1
    X = np.stack([y + rng.standard_normal((6, 6)) * 0.05, 1.0 - y], axis=2)
    est = ProtoSegmenter().fit(X, y)
    pred = est.predict(X)
    assert pred.shape == (6, 6)
    np.testing.assert_array_equal(pred, y)
    assert est.predict_proba(X).shape == (6, 6, 2)
    assert est.score(X, y) == 1.0


def test_refit_is_idempotent():
    X, y = separable_matrix()
    est = ProtoSegmenter().fit(X, y)
    first = est.prototypes_.copy()
    est.fit(X, y)
    np.testing.assert_array_equal(est.prototypes_, first)


def test_multiclass_labels():
    rng = np.random.default_rng(2)
    X = np.concatenate([rng.standard_normal((20, 2)) + 6 * k for k in range(3)])
    y = np.repeat([0, 1, 2], 20)
    est = ProtoSegmenter().fit(X, y)
    assert est.n_classes_ == 3
    assert np.mean(est.predict(X) == y) > 0.95


def test_soft_labels_weighting():
    X = np.array([[1.0], [3.0]])[:, :]  # two samples, one feature
    est = ProtoSegmenter(soft_labels=True).fit(X, np.array([0.25, 0.75]))
    assert est.prototypes_[1, 0] == pytest.approx(2.5)
    assert est.prototypes_[0, 0] == pytest.approx(1.5)


def test_channel_mismatch_at_predict():
    X, y = separable_matrix()
    est = ProtoSegmenter().fit(X, y)
    with pytest.raises(ShapeMismatchError):
        est.predict(np.zeros((4, 3)))


def test_rank_one_input_rejected():
    with pytest.raises(ShapeMismatchError):
        ProtoSegmenter().fit(np.zeros(5), np.zeros(5))
