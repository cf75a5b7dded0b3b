"""Input validation helpers shared by the functional core and the estimator."""

from __future__ import annotations

import numpy as np

from .errors import NonFiniteValueError, ShapeMismatchError


def check_feature_values(values) -> np.ndarray:
    """Coerce ``values`` to a finite float64 (H, W, C) array.

    2-D input is treated as a single-channel map.  Raises
    :class:`ShapeMismatchError` for other ranks or empty axes and
    :class:`NonFiniteValueError` for NaN/Inf entries.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise ShapeMismatchError(f"feature values must be (H, W, C), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeMismatchError(f"feature dimensions must all be >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError("feature values contain NaN or Inf")
    return np.ascontiguousarray(arr)


def check_label_values(labels, num_classes: int) -> np.ndarray:
    """Coerce ``labels`` to an int64 (H, W) grid with entries in [0, num_classes)."""
    arr = np.asarray(labels)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"labels must be (H, W), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeMismatchError(f"label dimensions must all be >= 1, got shape {arr.shape}")
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValueError("labels contain NaN or Inf")
        rounded = arr.astype(np.int64)
        if not np.array_equal(rounded, arr):
            raise ValueError("float labels must be integral")
        arr = rounded
    elif arr.dtype.kind in "ui" or arr.dtype.kind == "b":
        arr = arr.astype(np.int64)
    else:
        raise ValueError(f"labels must be integer-valued, got dtype {arr.dtype}")
    if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
        raise ValueError(
            f"labels must lie in [0, {num_classes - 1}], got range [{arr.min()}, {arr.max()}]"
        )
    return np.ascontiguousarray(arr)


def check_soft_weights(weights, shape_hw: tuple[int, int] | None = None) -> np.ndarray:
    """Coerce soft binary mask weights to a float64 (H, W) array in [0, 1]."""
    arr = np.asarray(weights, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise ShapeMismatchError(f"soft mask must be (H, W), got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError("soft mask contains NaN or Inf")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("soft mask weights must lie in [0, 1]")
    if shape_hw is not None and arr.shape != shape_hw:
        raise ShapeMismatchError(f"soft mask shape {arr.shape} does not match {shape_hw}")
    return np.ascontiguousarray(arr)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what} have mismatched shapes {a.shape} vs {b.shape}")
