"""Parameter-free prototype segmentation on feature tensors.

The pipeline is: class prototypes as mask-weighted channel means, per-pixel
squared-Euclidean distances to each prototype, a numerically stabilized softmax
over the negated distances, and a hard labeling by argmax.  All functions are
pure; arrays are never mutated in place.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyClassError, ShapeMismatchError, UnitIndexError
from .types import (
    FeatureMap,
    LabelMask,
    ProbabilityMap,
    PrototypeSet,
    SegmentationAbilityMap,
    as_feature_map,
)
from .validation import check_soft_weights


def mask_weights(mask, shape_hw: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Per-class pixel weights and member counts for a hard or soft mask.

    A :class:`LabelMask` yields one-hot weights for each of its K classes.  A
    raw array is read as soft binary weights in [0, 1]: class 1 gets weight B,
    class 0 gets 1 - B, and membership (for empty-class detection) is decided
    at the 0.5 threshold, rounding half up.

    Returns ``(weights, counts)`` with weights (K, H*W) and counts (K,).
    """
    if isinstance(mask, LabelMask):
        if mask.spatial_shape != shape_hw:
            raise ShapeMismatchError(
                f"mask shape {mask.spatial_shape} does not match feature shape {shape_hw}"
            )
        labels = mask.labels.ravel()
        k = mask.num_classes
        weights = np.zeros((k, labels.size), dtype=np.float64)
        weights[labels, np.arange(labels.size)] = 1.0
        counts = np.bincount(labels, minlength=k)
    else:
        soft = check_soft_weights(mask, shape_hw).ravel()
        weights = np.stack([1.0 - soft, soft])
        members = soft >= 0.5
        counts = np.array([int((~members).sum()), int(members.sum())], dtype=np.int64)
    return weights, counts


def compute_prototypes(f, mask) -> PrototypeSet:
    """Class prototypes as the mask-weighted mean feature vector per class.

    ``mask`` may be a :class:`LabelMask` (hard, K classes) or a raw array of
    soft binary weights in [0, 1].  Raises :class:`EmptyClassError` when a
    class has no member pixels and :class:`ShapeMismatchError` when spatial
    dims disagree.
    """
    fm = as_feature_map(f)
    weights, counts = mask_weights(mask, fm.spatial_shape)
    for k, count in enumerate(counts):
        if count == 0:
            raise EmptyClassError(k)
    flat = fm.values.reshape(-1, fm.channels)
    centers = (weights @ flat) / weights.sum(axis=1)[:, None]
    return PrototypeSet(centers=centers, member_counts=counts)


def probability_map(f, protos: PrototypeSet) -> ProbabilityMap:
    """Softmax over negated squared-Euclidean distances to each prototype.

    The distance is summed over channels; the softmax subtracts the per-pixel
    max logit first, so arbitrarily large separations saturate to one-hot
    instead of overflowing.
    """
    fm = as_feature_map(f)
    if fm.channels != protos.channels:
        raise ShapeMismatchError(
            f"feature has {fm.channels} channels but prototypes have {protos.channels}"
        )
    flat = fm.values.reshape(-1, fm.channels)
    diff = flat[:, None, :] - protos.centers[None, :, :]
    logits = -np.einsum("nkc,nkc->nk", diff, diff)
    logits -= logits.max(axis=1, keepdims=True)
    np.exp(logits, out=logits)
    probs = logits / logits.sum(axis=1, keepdims=True)
    return ProbabilityMap(probs.reshape(fm.height, fm.width, protos.num_classes))


def hard_segment(
    p: ProbabilityMap,
    source_layer: int | None = None,
    source_unit: int | None = None,
) -> SegmentationAbilityMap:
    """Per-pixel argmax labeling; ties go to the lowest class index.

    In the binary case an exact tie therefore labels the pixel background,
    matching the strict ``p(object) > p(background)`` rule.
    """
    labels = np.argmax(p.probs, axis=2)
    mask = LabelMask(labels, num_classes=p.num_classes)
    return SegmentationAbilityMap(mask, source_layer=source_layer, source_unit=source_unit)


def protoseg(f, init_mask) -> tuple[ProbabilityMap, SegmentationAbilityMap]:
    """Full prototype segmentation: prototypes -> probability map -> hard map."""
    fm = as_feature_map(f)
    protos = compute_prototypes(fm, init_mask)
    pmap = probability_map(fm, protos)
    sam = hard_segment(pmap, source_layer=fm.layer_id, source_unit=fm.unit_id)
    return pmap, sam


def _lerp_axis(values: np.ndarray, target: int, axis: int) -> np.ndarray:
    """Linear interpolation along one axis with pixel centers at (i + 0.5)/n."""
    n = values.shape[axis]
    pos = (np.arange(target) + 0.5) * (n / target) - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo_c = np.clip(lo, 0, n - 1)
    hi_c = np.clip(lo + 1, 0, n - 1)
    a = np.take(values, lo_c, axis=axis)
    b = np.take(values, hi_c, axis=axis)
    shape = [1, 1, 1]
    shape[axis] = target
    w = frac.reshape(shape)
    # a + w*(b-a) keeps clamped borders and exact-grid hits bit-identical
    return a + w * (b - a)


def upsample(f, target_h: int, target_w: int, mode: str = "bilinear") -> FeatureMap:
    """Resize a feature map to (target_h, target_w), preserving channels.

    ``bilinear`` places pixel centers at (i + 0.5)/n (half-pixel convention,
    clamped at borders); ``nearest`` maps each target pixel to
    floor(center * scale).  When the target equals the source the map is
    returned unchanged.
    """
    fm = as_feature_map(f)
    if target_h < 1 or target_w < 1:
        raise ValueError(f"target dims must be >= 1, got {target_h}x{target_w}")
    if mode not in ("nearest", "bilinear"):
        raise ValueError(f"unknown upsample mode: {mode!r}")
    if (target_h, target_w) == fm.spatial_shape:
        return fm
    if mode == "nearest":
        rows = np.floor((np.arange(target_h) + 0.5) * (fm.height / target_h)).astype(np.int64)
        cols = np.floor((np.arange(target_w) + 0.5) * (fm.width / target_w)).astype(np.int64)
        rows = np.clip(rows, 0, fm.height - 1)
        cols = np.clip(cols, 0, fm.width - 1)
        out = fm.values[rows[:, None], cols[None, :], :]
    else:
        out = _lerp_axis(fm.values, target_h, axis=0)
        out = _lerp_axis(out, target_w, axis=1)
    return FeatureMap(out, layer_id=fm.layer_id, unit_id=fm.unit_id)


def extract_unit(f, channel: int) -> FeatureMap:
    """Slice one channel out as an H x W x 1 feature map tagged with its unit id."""
    fm = as_feature_map(f)
    if not 0 <= channel < fm.channels:
        raise UnitIndexError(f"unit {channel} out of range for {fm.channels} channels")
    return FeatureMap(fm.values[:, :, channel : channel + 1], layer_id=fm.layer_id, unit_id=channel)
