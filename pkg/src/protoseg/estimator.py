"""Scikit-learn style estimator facade over the functional core."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .core import compute_prototypes, hard_segment, probability_map
from .errors import ShapeMismatchError
from .metrics import sa_score
from .types import FeatureMap, LabelMask, PrototypeSet
from .validation import check_soft_weights


class ProtoSegmenter(BaseEstimator):
    """Parameter-free nearest-prototype segmenter with a fit/predict surface.

    ``fit(X, y)`` computes one prototype per class as the y-weighted mean
    feature vector; ``predict(X)`` labels each pixel or sample by softmax over
    negated squared distances to the prototypes.  There is nothing iterative:
    fit is a single pass and refitting with the same data is idempotent.

    ``X`` is either an (H, W, C) feature image with ``y`` of shape (H, W), or
    a flat (n_samples, n_features) matrix with ``y`` of shape (n_samples,).
    With ``soft_labels`` the binary ``y`` may hold fractional memberships in
    [0, 1].

    Attributes after fit: ``prototypes_`` (K, C), ``member_counts_`` (K,),
    ``n_channels_``, ``n_classes_``.
    """

    def __init__(self, num_classes: int | None = None, soft_labels: bool = False):
        self.num_classes = num_classes
        self.soft_labels = soft_labels

    def _as_image(self, X) -> tuple[FeatureMap, bool]:
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 3:
            return FeatureMap(arr), False
        if arr.ndim == 2:
            # flat samples ride as a (n, 1, C) single-column image
            return FeatureMap(arr[:, np.newaxis, :]), True
        raise ShapeMismatchError(
            f"X must be (H, W, C) or (n_samples, n_features), got shape {arr.shape}"
        )

    def _as_mask(self, y, fm: FeatureMap, flat: bool):
        arr = np.asarray(y)
        if flat:
            if arr.ndim != 1 or arr.shape[0] != fm.height:
                raise ShapeMismatchError(
                    f"y must have shape ({fm.height},) for matrix X, got {arr.shape}"
                )
            arr = arr[:, np.newaxis]
        if self.soft_labels:
            return check_soft_weights(arr, fm.spatial_shape)
        k = self.num_classes
        if k is None:
            k = max(2, int(np.max(arr)) + 1) if arr.size else 2
        return LabelMask(arr, num_classes=k)

    def fit(self, X, y):
        fm, flat = self._as_image(X)
        mask = self._as_mask(y, fm, flat)
        protos = compute_prototypes(fm, mask)
        self.prototypes_ = protos.centers
        self.member_counts_ = protos.member_counts
        self.n_channels_ = fm.channels
        self.n_classes_ = protos.num_classes
        return self

    def _check_fitted(self) -> PrototypeSet:
        if not hasattr(self, "prototypes_"):
            raise NotFittedError(
                "This ProtoSegmenter instance is not fitted yet; call fit first."
            )
        return PrototypeSet(self.prototypes_, self.member_counts_)

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities, shaped (H, W, K) for images, (n_samples, K) for matrices."""
        protos = self._check_fitted()
        fm, flat = self._as_image(X)
        if fm.channels != self.n_channels_:
            raise ShapeMismatchError(
                f"X has {fm.channels} channels, fit saw {self.n_channels_}"
            )
        probs = probability_map(fm, protos).probs
        return probs[:, 0, :] if flat else probs

    def predict(self, X) -> np.ndarray:
        """Hard labels, shaped (H, W) for images, (n_samples,) for matrices."""
        protos = self._check_fitted()
        fm, flat = self._as_image(X)
        if fm.channels != self.n_channels_:
            raise ShapeMismatchError(
                f"X has {fm.channels} channels, fit saw {self.n_channels_}"
            )
        labels = hard_segment(probability_map(fm, protos)).labels
        return labels[:, 0] if flat else labels

    def score(self, X, y) -> float:
        """Dice overlap of the positive class between predict(X) and y."""
        self._check_fitted()
        fm, flat = self._as_image(X)
        predicted = self.predict(X)
        truth = np.asarray(y)
        if flat:
            truth = truth[:, np.newaxis]
            predicted = predicted[:, np.newaxis]
        return sa_score(predicted, LabelMask(truth, num_classes=self.n_classes_)).value
