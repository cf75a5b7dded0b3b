"""Scores over segmentation maps: SA (Dice) score, mean SA score, gain distance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import protoseg
from .errors import EmptyInputError, ShapeMismatchError, UndefinedScoreError
from .types import LabelMask, SegmentationAbilityMap, as_feature_map, as_label_mask


@dataclass(frozen=True)
class SaScore:
    """A Dice overlap in [0, 1]; ``defined`` is False when no score exists
    (e.g. the map it would grade could not be computed)."""

    value: float
    defined: bool = True

    def __post_init__(self):
        if self.defined and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"SA score must lie in [0, 1], got {self.value}")

    @classmethod
    def undefined(cls) -> "SaScore":
        return cls(value=float("nan"), defined=False)


@dataclass(frozen=True)
class MeanSaScore:
    """Arithmetic mean of the defined unit SA scores; ``unit_count`` is how many contributed."""

    mu: float
    unit_count: int


@dataclass(frozen=True)
class GainRecord:
    """Per-image gain of the network output over raw-input segmentation.

    ``sa_input`` grades the input-intensity segmentation against ground truth,
    ``dice_output`` grades the network output, and ``d = dice_output - sa_input``
    is the gain distance.
    """

    image_id: str | None
    sa_input: float
    dice_output: float
    d: float


def _positive_counts(labels: np.ndarray, positive_class: int) -> np.ndarray:
    return labels == positive_class


def sa_score(s, g, positive_class: int = 1) -> SaScore:
    """Dice overlap of the positive class: ``2|S∩G| / (|S| + |G|)``.

    When both maps are empty for the class, the two raters agree on "nothing"
    and the score is 1.0.  Accepts label masks, segmentation ability maps, or
    raw integer arrays.
    """
    s_labels = _labels_of(s)
    g_labels = _labels_of(g)
    if s_labels.shape != g_labels.shape:
        raise ShapeMismatchError(
            f"maps have mismatched shapes {s_labels.shape} vs {g_labels.shape}"
        )
    s_pos = _positive_counts(s_labels, positive_class)
    g_pos = _positive_counts(g_labels, positive_class)
    s_count = int(s_pos.sum())
    g_count = int(g_pos.sum())
    if s_count + g_count == 0:
        return SaScore(1.0)
    inter = int(np.count_nonzero(s_pos & g_pos))
    return SaScore(2.0 * inter / (s_count + g_count))


def _labels_of(m) -> np.ndarray:
    if isinstance(m, SegmentationAbilityMap):
        return m.labels
    if isinstance(m, LabelMask):
        return m.labels
    return as_label_mask(m).labels


def mean_sa_score(
    unit_sams: Sequence[SegmentationAbilityMap | None],
    reference,
    positive_class: int = 1,
) -> MeanSaScore:
    """Mean SA score of per-unit maps against a reference mask.

    ``None`` entries stand for units whose map could not be computed; they are
    excluded and the count decremented.  Raises :class:`EmptyInputError` when
    no defined score remains.
    """
    if len(unit_sams) == 0:
        raise EmptyInputError("unit_sams is empty")
    ref = as_label_mask(reference)
    values = []
    for sam in unit_sams:
        if sam is None:
            continue
        values.append(sa_score(sam, ref, positive_class=positive_class).value)
    if not values:
        raise EmptyInputError("no defined unit score remains")
    return MeanSaScore(mu=float(np.mean(values)), unit_count=len(values))


def sa_difference(sa_noisy: SaScore, sa_clean: SaScore) -> float:
    """Noisy-minus-clean SA score, in [-1, 1]."""
    if not (sa_noisy.defined and sa_clean.defined):
        raise UndefinedScoreError("both scores must be defined")
    return sa_noisy.value - sa_clean.value


def separableness(
    x, init_mask, g, image_id: str | None = None, positive_class: int = 1
) -> GainRecord:
    """How segmentable an image is from raw intensities, and the network's gain.

    Runs prototype segmentation directly on the input tensor ``x`` (channels =
    colors/modalities) seeded by the network output ``init_mask``, grades the
    result against ground truth ``g``, and reports
    ``d = Dice(init_mask, g) - SA(S_x, g)``.
    """
    fm = as_feature_map(x)
    truth = as_label_mask(g)
    _, sam = protoseg(fm, init_mask)
    if isinstance(init_mask, LabelMask):
        init_labels = init_mask
    else:
        # raw array: a soft output is binarized at 0.5 before the Dice
        init_labels = as_label_mask((np.asarray(init_mask) >= 0.5).astype(np.int64))
    sa_input = sa_score(sam, truth, positive_class=positive_class).value
    dice_output = sa_score(init_labels, truth, positive_class=positive_class).value
    return GainRecord(
        image_id=image_id,
        sa_input=sa_input,
        dice_output=dice_output,
        d=dice_output - sa_input,
    )


def mean_gain(records: Iterable[GainRecord]) -> float:
    """Dataset-mean gain distance m(d) = sum(d) / N."""
    ds = [r.d for r in records]
    if not ds:
        raise EmptyInputError("no gain records")
    return float(np.mean(ds))
