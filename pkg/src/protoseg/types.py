"""Array-backed value types: feature maps, label masks, prototypes, probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteValueError, ShapeMismatchError
from .validation import check_feature_values, check_label_values


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """An H x W x C real-valued feature tensor, optionally tagged with its origin.

    ``values`` is stored as contiguous float64; a 2-D array is accepted and
    treated as a single channel.  ``layer_id`` / ``unit_id`` identify where in
    a network the tensor was captured and travel into derived maps.
    """

    values: np.ndarray
    layer_id: int | None = None
    unit_id: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", check_feature_values(self.values))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    @property
    def spatial_shape(self) -> tuple[int, int]:
        return self.values.shape[0], self.values.shape[1]


@dataclass(frozen=True, eq=False)
class LabelMask:
    """An H x W integer label grid with ``num_classes`` classes.

    For the binary case class 0 is background and class 1 the object.
    """

    labels: np.ndarray
    num_classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "labels", check_label_values(self.labels, self.num_classes))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def spatial_shape(self) -> tuple[int, int]:
        return self.labels.shape

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.num_classes)


@dataclass(frozen=True, eq=False)
class PrototypeSet:
    """Per-class mean feature vectors: ``centers`` is (K, C), one row per class."""

    centers: np.ndarray
    member_counts: np.ndarray

    def __post_init__(self):
        centers = np.ascontiguousarray(np.asarray(self.centers, dtype=np.float64))
        if centers.ndim != 2:
            raise ShapeMismatchError(f"centers must be (K, C), got shape {centers.shape}")
        if not np.all(np.isfinite(centers)):
            raise NonFiniteValueError("prototype centers contain NaN or Inf")
        counts = np.asarray(self.member_counts, dtype=np.int64)
        if counts.shape != (centers.shape[0],):
            raise ShapeMismatchError("member_counts must have one entry per class")
        if counts.size and counts.min() < 1:
            raise ValueError("every class must have at least one member pixel")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "member_counts", counts)

    @property
    def num_classes(self) -> int:
        return self.centers.shape[0]

    @property
    def channels(self) -> int:
        return self.centers.shape[1]


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    """Per-pixel class probabilities, shape (H, W, K); rows sum to one."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.ascontiguousarray(np.asarray(self.probs, dtype=np.float64))
        if probs.ndim != 3 or probs.shape[2] < 2:
            raise ShapeMismatchError(f"probs must be (H, W, K>=2), got shape {probs.shape}")
        if not np.all(np.isfinite(probs)):
            raise NonFiniteValueError("probabilities contain NaN or Inf")
        if probs.min() < 0.0 or probs.max() > 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        sums = probs.sum(axis=2)
        if np.abs(sums - 1.0).max() > 1e-6:
            raise ValueError("per-pixel probabilities must sum to 1 within 1e-6")
        object.__setattr__(self, "probs", probs)

    @property
    def height(self) -> int:
        return self.probs.shape[0]

    @property
    def width(self) -> int:
        return self.probs.shape[1]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[2]


@dataclass(frozen=True, eq=False)
class SegmentationAbilityMap:
    """Hard per-pixel labeling derived from a probability map by argmax."""

    mask: LabelMask
    source_layer: int | None = None
    source_unit: int | None = None

    @property
    def labels(self) -> np.ndarray:
        return self.mask.labels

    @property
    def spatial_shape(self) -> tuple[int, int]:
        return self.mask.spatial_shape


def as_feature_map(f, layer_id: int | None = None, unit_id: int | None = None) -> FeatureMap:
    """Pass a :class:`FeatureMap` through; wrap a raw array into one."""
    if isinstance(f, FeatureMap):
        return f
    return FeatureMap(f, layer_id=layer_id, unit_id=unit_id)


def as_label_mask(m, num_classes: int | None = None) -> LabelMask:
    """Pass a :class:`LabelMask` through; wrap a raw integer array into one."""
    if isinstance(m, LabelMask):
        return m
    arr = np.asarray(m)
    if num_classes is None:
        num_classes = max(2, int(arr.max()) + 1) if arr.size else 2
    return LabelMask(arr, num_classes=num_classes)
