"""Soft-Dice loss and its hand-derived gradient, against finite differences."""

import numpy as np
import pytest

from protoseg import (
    FeatureMap,
    GradMode,
    LabelMask,
    finite_diff_check,
    protoseg,
    protoseg_backward,
    protoseg_loss,
    soft_dice_loss,
)


def random_case(seed, h=3, w=3, c=2):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal((h, w, c))
    init = rng.integers(0, 2, size=(h, w))
    init.flat[0] = 0
    init.flat[-1] = 1
    g = rng.integers(0, 2, size=(h, w))
    return FeatureMap(values), LabelMask(init), LabelMask(g)


def test_soft_dice_loss_perfect_prediction():
    g = np.array([[1, 0], [0, 1]])
    probs = np.stack([1.0 - g, g.astype(float)], axis=2)
    assert soft_dice_loss(probs, LabelMask(g)) == pytest.approx(0.0, abs=1e-6)


def test_soft_dice_loss_worst_prediction():
    g = np.array([[1, 1], [1, 1]])
    probs = np.stack([np.ones((2, 2)), np.zeros((2, 2))], axis=2)
    # no overlap at all: loss -> 1 up to the smoothing epsilon
    assert soft_dice_loss(probs, LabelMask(g)) == pytest.approx(1.0, abs=1e-6)


def test_soft_dice_loss_hand_value():
    g = np.array([[1, 0]])
    probs = np.array([[[0.25, 0.75], [0.4, 0.6]]])
    eps = 1e-6
    num = 2 * 0.75 + eps
    den = (0.75 + 0.6) + 1.0 + eps
    assert soft_dice_loss(probs, LabelMask(g)) == pytest.approx(1 - num / den)


def test_soft_dice_loss_epsilon_guard():
    g = LabelMask(np.array([[0, 1]]))
    probs = np.array([[[1.0, 0.0], [0.0, 1.0]]])
    with pytest.raises(ValueError):
        soft_dice_loss(probs, g, epsilon=0.0)


def test_protoseg_loss_agrees_with_explicit_composition():
    fm, init, g = random_case(1)
    probs, _ = protoseg(fm, init)
    assert protoseg_loss(fm, init, g) == pytest.approx(soft_dice_loss(probs, g), abs=1e-12)


def test_gradient_shape_matches_features():
    fm, init, g = random_case(2)
    grad = protoseg_backward(fm, init, g)
    assert grad.shape == fm.values.shape
    assert np.all(np.isfinite(grad))


@pytest.mark.parametrize("mode", [GradMode.THROUGH_PROTOTYPES, GradMode.DETACHED_PROTOTYPES])
def test_gradient_matches_finite_differences(mode):
    for seed in range(10):
        fm, init, g = random_case(seed)
        err = finite_diff_check(fm, init, g, mode=mode)
        assert err < 1e-6, f"seed {seed}: max relative error {err}"


@pytest.mark.parametrize("mode", [GradMode.THROUGH_PROTOTYPES, GradMode.DETACHED_PROTOTYPES])
def test_gradient_with_soft_initial_mask(mode):
    rng = np.random.default_rng(31)
    fm = FeatureMap(rng.standard_normal((3, 3, 2)))
    soft = rng.random((3, 3))
    g = LabelMask(rng.integers(0, 2, size=(3, 3)))
    err = finite_diff_check(fm, soft, g, mode=mode)
    assert err < 1e-6


def test_modes_disagree_in_general():
    fm, init, g = random_case(4)
    through = protoseg_backward(fm, init, g, mode=GradMode.THROUGH_PROTOTYPES)
    detached = protoseg_backward(fm, init, g, mode=GradMode.DETACHED_PROTOTYPES)
    assert not np.allclose(through, detached)


def test_constant_features_give_zero_gradient_check():
    # every distance is even in any single-coordinate perturbation here, so
    # central differences vanish exactly and so must the analytic gradient
    fm = FeatureMap(np.zeros((2, 2, 1)))
    init = LabelMask(np.array([[0, 1], [1, 0]]))
    g = LabelMask(np.array([[0, 0], [1, 1]]))
    assert finite_diff_check(fm, init, g) < 1e-6
    grad = protoseg_backward(fm, init, g)
    np.testing.assert_allclose(grad, 0.0, atol=1e-12)


def test_finite_diff_step_guard():
    fm, init, g = random_case(5)
    with pytest.raises(ValueError):
        finite_diff_check(fm, init, g, step=0.0)


def test_gradient_descent_step_reduces_loss():
    fm, init, g = random_case(6, h=4, w=4, c=3)
    base = protoseg_loss(fm, init, g)
    grad = protoseg_backward(fm, init, g)
    stepped = FeatureMap(fm.values - 0.05 * grad)
    assert protoseg_loss(stepped, init, g) < base
