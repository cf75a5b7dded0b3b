"""Seeded synthetic images: blob masks, class-separated features, simulated outputs.

Stands in for trained-network dumps at desk scale: the ground truth is a random
blob, features are Gaussian per class with a controllable mean separation, and
the "network output" is the ground truth with a seeded fraction of boundary
pixels flipped.  Harder images (small separation) get sloppier outputs, which
is what makes the bed useful for confidence/coverage experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SyntheticSpecError
from .types import FeatureMap, LabelMask


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one synthetic image.

    ``class_separation`` is the object-minus-background mean gap in units of
    ``noise_sigma``; ``object_fraction`` the approximate share of object pixels.
    """

    seed: int
    height: int = 32
    width: int = 32
    channels: int = 1
    class_separation: float = 2.0
    object_fraction: float = 0.3
    noise_sigma: float = 1.0

    def __post_init__(self):
        if self.seed < 0:
            raise SyntheticSpecError(f"seed must be >= 0, got {self.seed}")
        if self.height < 1 or self.width < 1:
            raise SyntheticSpecError("height and width must be >= 1")
        if self.height * self.width < 2:
            raise SyntheticSpecError("need at least two pixels to hold two classes")
        if self.channels < 1:
            raise SyntheticSpecError("channels must be >= 1")
        if not self.class_separation >= 0.0:
            raise SyntheticSpecError("class_separation must be >= 0")
        if not 0.0 < self.object_fraction < 1.0:
            raise SyntheticSpecError("object_fraction must lie in (0, 1)")
        if not self.noise_sigma > 0.0:
            raise SyntheticSpecError("noise_sigma must be > 0")


def _box_blur(field: np.ndarray, k: int) -> np.ndarray:
    kernel = np.ones(k) / k
    for axis in (0, 1):
        field = np.apply_along_axis(np.convolve, axis, field, kernel, mode="same")
    return field


def synthetic_mask(rng: np.random.Generator, height: int, width: int, fraction: float) -> np.ndarray:
    """A 0/1 blob mask covering round(fraction * H * W) pixels (at least 1 each class)."""
    field = rng.standard_normal((height, width))
    k = max(3, min(height, width) // 3)
    field = _box_blur(_box_blur(field, k), k)
    n = height * width
    target = int(round(fraction * n))
    target = min(max(target, 1), n - 1)
    order = np.argsort(-field, axis=None, kind="stable")
    mask = np.zeros(n, dtype=np.int64)
    mask[order[:target]] = 1
    return mask.reshape(height, width)


def synthetic_features(
    rng: np.random.Generator,
    mask: np.ndarray,
    channels: int,
    separation: float,
    sigma: float,
) -> np.ndarray:
    """Per-channel Gaussian features: N(0, sigma^2) background, N(sep*sigma, sigma^2) object."""
    values = rng.standard_normal((mask.shape[0], mask.shape[1], channels)) * sigma
    values[mask == 1, :] += separation * sigma
    return values


def boundary_flip_fraction(separation: float) -> float:
    """Share of boundary pixels the simulated output gets wrong.

    Decays with separation so that easy images receive near-perfect outputs
    and hard ones visibly degraded outputs.
    """
    return 0.05 + 0.65 * float(np.exp(-0.7 * separation))


def simulated_output(rng: np.random.Generator, mask: np.ndarray, separation: float) -> np.ndarray:
    """Ground truth with a seeded fraction of its class-boundary pixels flipped."""
    height, width = mask.shape
    boundary = np.zeros((height, width), dtype=bool)
    boundary[:-1, :] |= mask[:-1, :] != mask[1:, :]
    boundary[1:, :] |= mask[1:, :] != mask[:-1, :]
    boundary[:, :-1] |= mask[:, :-1] != mask[:, 1:]
    boundary[:, 1:] |= mask[:, 1:] != mask[:, :-1]
    candidates = np.flatnonzero(boundary.ravel())
    out = mask.copy().ravel()
    if candidates.size:
        n_flip = int(round(boundary_flip_fraction(separation) * candidates.size))
        n_flip = min(n_flip, candidates.size)
        if n_flip:
            picked = rng.choice(candidates, size=n_flip, replace=False)
            out[picked] ^= 1
    # flips must not erase a whole class
    for cls in (0, 1):
        if not np.any(out == cls):
            out[np.flatnonzero(mask.ravel() == cls)[0]] = cls
    return out.reshape(height, width)


def gen_synthetic(spec: SyntheticSpec) -> tuple[FeatureMap, LabelMask, LabelMask]:
    """Generate (features, ground truth, simulated output) for one spec.

    Deterministic: the same spec always yields identical arrays.  Draw order
    is mask field, then feature noise, then output flips.
    """
    rng = np.random.default_rng(spec.seed)
    mask = synthetic_mask(rng, spec.height, spec.width, spec.object_fraction)
    values = synthetic_features(rng, mask, spec.channels, spec.class_separation, spec.noise_sigma)
    output = simulated_output(rng, mask, spec.class_separation)
    return (
        FeatureMap(values),
        LabelMask(mask, num_classes=2),
        LabelMask(output, num_classes=2),
    )
