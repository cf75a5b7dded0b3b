"""Prototype computation, probability maps, hard labeling, upsampling."""

import numpy as np
import pytest

from protoseg import (
    EmptyClassError,
    FeatureMap,
    LabelMask,
    NonFiniteValueError,
    PrototypeSet,
    ShapeMismatchError,
    UnitIndexError,
    compute_prototypes,
    extract_unit,
    hard_segment,
    mask_weights,
    probability_map,
    protoseg,
    upsample,
)


def test_prototypes_worked_example():
    # f = [[1,2],[3,4]], mask diagonal: object mean (1+4)/2, background (2+3)/2
    f = FeatureMap(np.array([[1.0, 2.0], [3.0, 4.0]])[:, :, None])
    mask = LabelMask(np.array([[1, 0], [0, 1]]))
    protos = compute_prototypes(f, mask)
    assert protos.centers.shape == (2, 1)
    assert protos.centers[1, 0] == pytest.approx(2.5)
    assert protos.centers[0, 0] == pytest.approx(2.5)
    assert list(protos.member_counts) == [2, 2]


def test_equal_prototypes_tie_goes_to_background():
    f = FeatureMap(np.array([[1.0, 2.0], [3.0, 4.0]])[:, :, None])
    mask = LabelMask(np.array([[1, 0], [0, 1]]))
    _, sam = protoseg(f, mask)
    assert np.all(sam.labels == 0)


def test_prototypes_match_weighted_mean_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        values = rng.standard_normal((5, 6, 3))
        labels = rng.integers(0, 3, size=(5, 6))
        labels.flat[:3] = [0, 1, 2]  # every class populated
        protos = compute_prototypes(FeatureMap(values), LabelMask(labels, num_classes=3))
        for k in range(3):
            expected = values[labels == k].mean(axis=0)
            np.testing.assert_allclose(protos.centers[k], expected, rtol=1e-12)


def test_soft_mask_weights_and_counts():
    soft = np.array([[0.25, 0.75], [0.5, 1.0]])
    weights, counts = mask_weights(soft, (2, 2))
    np.testing.assert_allclose(weights[1], [0.25, 0.75, 0.5, 1.0])
    np.testing.assert_allclose(weights[0], [0.75, 0.25, 0.5, 0.0])
    # membership thresholds at 0.5, rounding half up
    assert list(counts) == [1, 3]


def test_soft_mask_prototypes_use_fractional_weights():
    values = np.array([[1.0, 3.0]])[:, :, None]
    soft = np.array([[0.25, 0.75]])
    protos = compute_prototypes(FeatureMap(values), soft)
    # object: (0.25*1 + 0.75*3) / 1.0; background: (0.75*1 + 0.25*3) / 1.0
    assert protos.centers[1, 0] == pytest.approx(2.5)
    assert protos.centers[0, 0] == pytest.approx(1.5)


def test_empty_class_raises_with_index():
    f = FeatureMap(np.ones((2, 2, 1)))
    with pytest.raises(EmptyClassError) as exc:
        compute_prototypes(f, LabelMask(np.zeros((2, 2), dtype=int)))
    assert exc.value.class_index == 1


def test_mask_shape_mismatch():
    f = FeatureMap(np.ones((2, 3, 1)))
    with pytest.raises(ShapeMismatchError):
        compute_prototypes(f, LabelMask(np.array([[0, 1], [1, 0]])))


def test_non_finite_features_rejected():
    values = np.ones((2, 2, 1))
    values[0, 0, 0] = np.nan
    with pytest.raises(NonFiniteValueError):
        FeatureMap(values)


def test_probability_rows_sum_to_one():
    rng = np.random.default_rng(11)
    for _ in range(20):
        values = rng.standard_normal((4, 4, 3))
        labels = rng.integers(0, 2, size=(4, 4))
        labels.flat[0] = 0
        labels.flat[-1] = 1
        probs, _ = protoseg(FeatureMap(values), LabelMask(labels))
        np.testing.assert_allclose(probs.probs.sum(axis=2), 1.0, atol=1e-12)


def test_probability_saturated_separation_is_finite():
    # prototypes separated by 1e6: naive softmax would overflow exp
    values = np.zeros((1, 2, 1))
    values[0, 1, 0] = 1e6
    mask = LabelMask(np.array([[0, 1]]))
    probs, sam = protoseg(FeatureMap(values), mask)
    assert np.all(np.isfinite(probs.probs))
    np.testing.assert_allclose(probs.probs.sum(axis=2), 1.0, atol=1e-6)
    assert list(sam.labels.ravel()) == [0, 1]


def test_mask_identity_fixpoint():
    # feature equal to the mask itself: prototypes are 0 and 1, labeling returns the mask
    rng = np.random.default_rng(3)
    for _ in range(20):
        labels = rng.integers(0, 2, size=(6, 6))
        labels.flat[0] = 0
        labels.flat[-1] = 1
        f = FeatureMap(labels.astype(np.float64)[:, :, None])
        _, sam = protoseg(f, LabelMask(labels))
        np.testing.assert_array_equal(sam.labels, labels)


def test_affine_invariance_of_labels():
    rng = np.random.default_rng(5)
    values = rng.standard_normal((5, 5, 4))
    labels = rng.integers(0, 2, size=(5, 5))
    labels.flat[0] = 0
    labels.flat[-1] = 1
    mask = LabelMask(labels)
    _, base = protoseg(FeatureMap(values), mask)
    for a in (0.5, 2.0, 100.0):
        t = rng.standard_normal(4)
        _, scaled = protoseg(FeatureMap(a * values + t), mask)
        np.testing.assert_array_equal(scaled.labels, base.labels)


def test_probability_map_channel_mismatch():
    protos = PrototypeSet(np.zeros((2, 3)), np.array([1, 1]))
    with pytest.raises(ShapeMismatchError):
        probability_map(FeatureMap(np.ones((2, 2, 2))), protos)


def test_hard_segment_carries_source_ids():
    f = FeatureMap(np.arange(8, dtype=float).reshape(2, 2, 2), layer_id=7, unit_id=None)
    mask = LabelMask(np.array([[0, 1], [1, 0]]))
    _, sam = protoseg(f, mask)
    assert sam.source_layer == 7
    assert sam.source_unit is None


def test_upsample_identity_returns_same_values():
    fm = FeatureMap(np.random.default_rng(0).standard_normal((4, 5, 2)))
    out = upsample(fm, 4, 5)
    np.testing.assert_array_equal(out.values, fm.values)


def test_upsample_constant_stays_constant():
    fm = FeatureMap(np.full((3, 3, 1), 2.75))
    for mode in ("nearest", "bilinear"):
        out = upsample(fm, 7, 11, mode=mode)
        assert out.spatial_shape == (7, 11)
        np.testing.assert_array_equal(out.values, np.full((7, 11, 1), 2.75))


def test_upsample_nearest_2x_repeats_pixels():
    values = np.array([[1.0, 2.0], [3.0, 4.0]])[:, :, None]
    out = upsample(FeatureMap(values), 4, 4, mode="nearest")
    expected = np.repeat(np.repeat(values, 2, axis=0), 2, axis=1)
    np.testing.assert_array_equal(out.values, expected)


def test_upsample_bilinear_2x_known_values():
    # half-pixel centers: the inner samples sit 1/4 and 3/4 between sources
    values = np.array([[0.0, 4.0]])[:, :, None]
    out = upsample(FeatureMap(values), 1, 4, mode="bilinear")
    np.testing.assert_allclose(out.values[0, :, 0], [0.0, 1.0, 3.0, 4.0])


def test_upsample_bilinear_matches_separable_oracle():
    rng = np.random.default_rng(9)
    values = rng.standard_normal((3, 4, 2))
    out = upsample(FeatureMap(values), 7, 9, mode="bilinear").values

    def sample(axis_len, target, i):
        pos = (i + 0.5) * (axis_len / target) - 0.5
        lo = int(np.floor(pos))
        frac = pos - lo
        lo_c = min(max(lo, 0), axis_len - 1)
        hi_c = min(max(lo + 1, 0), axis_len - 1)
        return lo_c, hi_c, frac

    for i in range(7):
        r0, r1, fr = sample(3, 7, i)
        for j in range(9):
            c0, c1, fc = sample(4, 9, j)
            top = values[r0, c0] + fc * (values[r0, c1] - values[r0, c0])
            bot = values[r1, c0] + fc * (values[r1, c1] - values[r1, c0])
            expected = top + fr * (bot - top)
            np.testing.assert_allclose(out[i, j], expected, rtol=1e-12)


def test_upsample_rejects_bad_args():
    fm = FeatureMap(np.ones((2, 2, 1)))
    with pytest.raises(ValueError):
        upsample(fm, 0, 4)
    with pytest.raises(ValueError):
        upsample(fm, 4, 4, mode="bicubic")


def test_extract_unit_slices_channel():
    values = np.arange(24, dtype=float).reshape(2, 3, 4)
    unit = extract_unit(FeatureMap(values, layer_id=2), 3)
    assert unit.channels == 1
    assert unit.unit_id == 3
    assert unit.layer_id == 2
    np.testing.assert_array_equal(unit.values[:, :, 0], values[:, :, 3])


def test_extract_unit_out_of_range():
    with pytest.raises(UnitIndexError):
        extract_unit(FeatureMap(np.ones((2, 2, 3))), 3)


def test_two_d_input_promoted_to_single_channel():
    _, sam = protoseg(np.array([[0.0, 1.0], [1.0, 0.0]]), LabelMask(np.array([[0, 1], [1, 0]])))
    np.testing.assert_array_equal(sam.labels, [[0, 1], [1, 0]])
