"""Differentiable soft prototype segmentation: loss, analytic gradients, FD check.

The scalar loss is a soft Dice on the positive-class probability channel,

    L = 1 - (2 * sum(p * g) + eps) / (sum(p) + sum(g) + eps),

which equals the hard Dice complement on one-hot maps and stays smooth
elsewhere.  ``protoseg_backward`` returns the exact gradient dL/df of that
loss through the whole pipeline (prototype means, squared-distance logits,
softmax); in ``DETACHED_PROTOTYPES`` mode the prototypes are treated as
constants of the input.

Derivation sketch, with pixels i, classes k, channels c, weights w[k,i]
normalized per class (W[k] = sum_i w[k,i]):

    center[k]   = sum_i w[k,i] f[i] / W[k]
    z[i,k]      = -||f[i] - center[k]||^2
    p[i,:]      = softmax(z[i,:])
    dL/dz[i,k]  = u[i] * p[i,t] * (delta[k,t] - p[i,k]),  u[i] = dL/dp[i,t]
    dL/df[j,c]  = -2 sum_k dL/dz[j,k] (f[j,c] - center[k,c])          (direct)
                  + 2 sum_k (w[k,j]/W[k]) A[k,c]                      (through)
    A[k,c]      = sum_i dL/dz[i,k] (f[i,c] - center[k,c])
"""

from __future__ import annotations

import enum

import numpy as np

from .core import mask_weights
from .errors import ShapeMismatchError
from .types import LabelMask, ProbabilityMap, as_feature_map, as_label_mask


class GradMode(enum.Enum):
    """Whether gradients flow through the prototype means or treat them as constants."""

    THROUGH_PROTOTYPES = "through"
    DETACHED_PROTOTYPES = "detached"


def soft_dice_loss(p, g, positive_class: int = 1, epsilon: float = 1e-6) -> float:
    """Soft Dice loss of one probability channel against a hard mask.

    ``p`` may be a :class:`ProbabilityMap` or a raw (H, W, K) array; ``g`` a
    label mask or integer array of the same spatial shape.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    probs = p.probs if isinstance(p, ProbabilityMap) else np.asarray(p, dtype=np.float64)
    mask = as_label_mask(g)
    if probs.ndim != 3 or probs.shape[:2] != mask.spatial_shape:
        raise ShapeMismatchError(
            f"probability shape {probs.shape} does not match mask {mask.spatial_shape}"
        )
    p_pos = probs[:, :, positive_class]
    g_pos = (mask.labels == positive_class).astype(np.float64)
    return float(_dice_loss_terms(p_pos.ravel(), g_pos.ravel(), epsilon))


def _dice_loss_terms(p_pos: np.ndarray, g_pos: np.ndarray, epsilon) -> np.floating:
    num = 2.0 * (p_pos * g_pos).sum() + epsilon
    den = p_pos.sum() + g_pos.sum() + epsilon
    return 1.0 - num / den


def _forward(flat, weights, mode: GradMode, base_centers=None):
    """Probabilities for flattened features; dtype follows the inputs."""
    if mode is GradMode.DETACHED_PROTOTYPES and base_centers is not None:
        centers = base_centers
    else:
        centers = (weights @ flat) / weights.sum(axis=1)[:, None]
    diff = flat[:, None, :] - centers[None, :, :]
    logits = -np.einsum("nkc,nkc->nk", diff, diff)
    logits = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(logits)
    probs = ex / ex.sum(axis=1, keepdims=True)
    return probs, centers


def protoseg_loss(
    f,
    init_mask,
    g,
    positive_class: int = 1,
    epsilon: float = 1e-6,
) -> float:
    """Scalar soft-Dice loss of the full pipeline for feature map ``f``."""
    fm = as_feature_map(f)
    weights, _ = mask_weights(init_mask, fm.spatial_shape)
    truth = as_label_mask(g)
    if truth.spatial_shape != fm.spatial_shape:
        raise ShapeMismatchError("ground truth does not match feature dims")
    flat = fm.values.reshape(-1, fm.channels)
    probs, _ = _forward(flat, weights, GradMode.THROUGH_PROTOTYPES)
    g_pos = (truth.labels.ravel() == positive_class).astype(np.float64)
    return float(_dice_loss_terms(probs[:, positive_class], g_pos, epsilon))


def protoseg_backward(
    f,
    init_mask,
    g,
    mode: GradMode = GradMode.THROUGH_PROTOTYPES,
    positive_class: int = 1,
    epsilon: float = 1e-6,
) -> np.ndarray:
    """Exact analytic gradient of the soft-Dice loss with respect to ``f``.

    Returns an array shaped like the feature tensor.  Saturated inputs (one-hot
    probabilities) yield vanishing gradients, never NaN.
    """
    fm = as_feature_map(f)
    weights, _ = mask_weights(init_mask, fm.spatial_shape)
    truth = as_label_mask(g)
    if truth.spatial_shape != fm.spatial_shape:
        raise ShapeMismatchError("ground truth does not match feature dims")
    if not isinstance(mode, GradMode):
        raise ValueError(f"mode must be a GradMode, got {mode!r}")

    flat = fm.values.reshape(-1, fm.channels)
    probs, centers = _forward(flat, weights, GradMode.THROUGH_PROTOTYPES)
    g_pos = (truth.labels.ravel() == positive_class).astype(np.float64)

    p_pos = probs[:, positive_class]
    num = 2.0 * (p_pos * g_pos).sum() + epsilon
    den = p_pos.sum() + g_pos.sum() + epsilon
    # dL/dp[i, positive]
    u = -(2.0 * g_pos * den - num) / (den * den)

    # dL/dz[i,k] through the softmax, only the positive channel feeds the loss
    dz = (u * p_pos)[:, None] * (-probs)
    dz[:, positive_class] += u * p_pos

    diff = flat[:, None, :] - centers[None, :, :]  # (N, K, C)
    grad = -2.0 * np.einsum("nk,nkc->nc", dz, diff)
    if mode is GradMode.THROUGH_PROTOTYPES:
        a = np.einsum("nk,nkc->kc", dz, diff)
        w_norm = weights / weights.sum(axis=1)[:, None]
        grad += 2.0 * (w_norm.T @ a)
    return grad.reshape(fm.values.shape)


def finite_diff_check(
    f,
    init_mask,
    g,
    mode: GradMode = GradMode.THROUGH_PROTOTYPES,
    step: float = 1e-5,
    positive_class: int = 1,
    epsilon: float = 1e-6,
) -> float:
    """Max relative error of the analytic gradient vs central finite differences.

    The numeric side runs in extended precision regardless of the storage
    precision of ``f`` (single-precision cancellation dominates at the default
    step).  In detached mode the prototypes are frozen at their base value
    while perturbing, matching what that gradient claims to measure.
    """
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")
    fm = as_feature_map(f)
    analytic = protoseg_backward(
        fm, init_mask, g, mode=mode, positive_class=positive_class, epsilon=epsilon
    ).ravel()

    weights64, _ = mask_weights(init_mask, fm.spatial_shape)
    weights = weights64.astype(np.longdouble)
    truth = as_label_mask(g)
    g_pos = (truth.labels.ravel() == positive_class).astype(np.longdouble)
    flat = fm.values.reshape(-1, fm.channels).astype(np.longdouble)
    eps_ld = np.longdouble(epsilon)

    base_centers = (weights @ flat) / weights.sum(axis=1)[:, None]

    def loss_at(perturbed: np.ndarray) -> np.longdouble:
        probs, _ = _forward(perturbed, weights, mode, base_centers=base_centers)
        return _dice_loss_terms(probs[:, positive_class], g_pos, eps_ld)

    h = np.longdouble(step)
    numeric = np.empty(flat.size, dtype=np.longdouble)
    work = flat.copy()
    for i in range(flat.size):
        orig = work.flat[i]
        work.flat[i] = orig + h
        up = loss_at(work)
        work.flat[i] = orig - h
        down = loss_at(work)
        work.flat[i] = orig
        numeric[i] = (up - down) / (2.0 * h)

    ana = analytic.astype(np.longdouble)
    denom = np.maximum(np.maximum(np.abs(ana), np.abs(numeric)), np.longdouble(1e-12))
    return float(np.max(np.abs(ana - numeric) / denom))
