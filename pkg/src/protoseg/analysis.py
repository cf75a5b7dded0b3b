"""Batch experiment pipelines over manifests of dumped features.

Layer sweeps, per-unit sweeps with active/inertia splits, unit-SAM heatmaps,
mean-score image ranking, coverage tables, separableness gains, and seeded
noise sweeps.  Per-entry failures (missing dumps, degenerate masks) are
recorded in the report and never abort a sweep, so long runs stay auditable.

Sweeps parallelize over pure (image, layer) work items with a bounded thread
pool; results are assembled in submission order, so parallel and serial runs
produce identical reports.
"""

from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, TypeVar

import numpy as np

from . import npyio
from .core import extract_unit, protoseg, upsample
from .errors import (
    EmptyClassError,
    EmptyInputError,
    ManifestError,
    ProtoSegError,
    ShapeMismatchError,
    TooFewUnitsError,
)
from .manifest import AnalysisManifest, ImageRef, LayerRef
from .metrics import GainRecord, MeanSaScore, mean_sa_score, sa_score, separableness
from .types import FeatureMap, SegmentationAbilityMap, as_feature_map

_T = TypeVar("_T")
_R = TypeVar("_R")


def resolve_jobs(jobs: int | None = None) -> int:
    """Worker count: explicit argument, else PROTOSEG_JOBS, else logical cores."""
    if jobs is None:
        env = os.environ.get("PROTOSEG_JOBS")
        if env is not None:
            try:
                jobs = int(env)
            except ValueError:
                raise ValueError(f"PROTOSEG_JOBS must be an integer, got {env!r}") from None
        else:
            jobs = os.cpu_count() or 1
    if jobs < 1:
        raise ValueError(f"job count must be >= 1, got {jobs}")
    return jobs


def _run_items(items: Sequence[_T], fn: Callable[[_T], _R], jobs: int | None) -> list[_R]:
    """Apply ``fn`` to every item, in order, optionally on a thread pool."""
    workers = min(resolve_jobs(jobs), max(len(items), 1))
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _error_text(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# layer sweep


@dataclass(frozen=True)
class LayerSweepEntry:
    image_id: str
    layer_index: int
    height: int | None
    width: int | None
    channels: int | None
    sa: float | None
    error: str | None = None


@dataclass(frozen=True)
class LayerSummary:
    layer_index: int
    mean_sa: float | None
    std_sa: float | None
    count: int
    error_count: int


@dataclass(frozen=True)
class LayerSweepReport:
    entries: tuple[LayerSweepEntry, ...]
    layers: tuple[LayerSummary, ...]

    csv_fields = ("image_id", "layer_index", "height", "width", "channels", "sa", "error")

    def to_rows(self) -> list[dict]:
        return [
            {
                "image_id": e.image_id,
                "layer_index": e.layer_index,
                "height": e.height,
                "width": e.width,
                "channels": e.channels,
                "sa": e.sa,
                "error": e.error,
            }
            for e in self.entries
        ]

    def to_jsonable(self) -> dict:
        return {
            "report": "layer-sweep",
            "entries": self.to_rows(),
            "layers": [
                {
                    "layer_index": s.layer_index,
                    "mean_sa": s.mean_sa,
                    "std_sa": s.std_sa,
                    "count": s.count,
                    "error_count": s.error_count,
                }
                for s in self.layers
            ],
        }


def _load_pair(image: ImageRef):
    """Ground truth (hard) and initial mask (hard or soft) for one image."""
    if image.ground_truth is None:
        raise ManifestError(f"image {image.image_id!r} has no ground_truth")
    truth = npyio.load_mask(image.ground_truth)
    init = npyio.load_mask(image.output, soft_ok=True)
    return truth, init


def _load_layer_feature(layer: LayerRef) -> FeatureMap:
    fm = npyio.load_feature(layer.feature, layer_id=layer.layer_index)
    if fm.channels != layer.channels:
        raise ManifestError(
            f"layer {layer.layer_index}: manifest declares {layer.channels} channels, "
            f"dump has {fm.channels}"
        )
    return fm


def layer_sweep(
    man: AnalysisManifest,
    jobs: int | None = None,
    upsample_mode: str = "bilinear",
    positive_class: int = 1,
) -> LayerSweepReport:
    """Score every (image, layer) pair: upsample the feature to ground-truth
    dims, segment with the output mask as the initial mask, Dice against the
    ground truth.  Aggregates mean and population std per layer."""
    items = [(img, layer) for img in man.images for layer in img.layers]

    def run(item) -> LayerSweepEntry:
        image, layer = item
        height = width = channels = None
        try:
            truth, init = _load_pair(image)
            fm = _load_layer_feature(layer)
            height, width, channels = fm.height, fm.width, fm.channels
            up = upsample(fm, truth.height, truth.width, mode=upsample_mode)
            _, sam = protoseg(up, init)
            score = sa_score(sam, truth, positive_class=positive_class)
            return LayerSweepEntry(
                image.image_id, layer.layer_index, height, width, channels, score.value
            )
        except (ProtoSegError, OSError) as exc:
            return LayerSweepEntry(
                image.image_id, layer.layer_index, height, width, channels, None,
                _error_text(exc),
            )

    entries = tuple(_run_items(items, run, jobs))
    summaries = []
    for layer_index in sorted({e.layer_index for e in entries}):
        scores = [e.sa for e in entries if e.layer_index == layer_index and e.sa is not None]
        errors = sum(1 for e in entries if e.layer_index == layer_index and e.error is not None)
        if scores:
            arr = np.asarray(scores, dtype=np.float64)
            summaries.append(
                LayerSummary(layer_index, float(arr.mean()), float(arr.std()), len(scores), errors)
            )
        else:
            summaries.append(LayerSummary(layer_index, None, None, 0, errors))
    return LayerSweepReport(entries=entries, layers=tuple(summaries))


# ---------------------------------------------------------------------------
# unit sweep


@dataclass(frozen=True)
class UnitScore:
    unit_id: int
    sa: float | None


@dataclass(frozen=True)
class UnitSweepReport:
    """Per-unit scores sorted descending (undefined units last) plus the
    active/inertia boundary: units before the boundary are the active group."""

    units: tuple[UnitScore, ...]
    boundary_index: int | None

    csv_fields = ("rank", "unit_id", "sa", "group")

    def group_of(self, position: int) -> str:
        if self.units[position].sa is None:
            return "undefined"
        if self.boundary_index is None:
            return "active"
        return "active" if position < self.boundary_index else "inertia"

    def to_rows(self) -> list[dict]:
        return [
            {"rank": i, "unit_id": u.unit_id, "sa": u.sa, "group": self.group_of(i)}
            for i, u in enumerate(self.units)
        ]

    def to_jsonable(self) -> dict:
        return {
            "report": "unit-sweep",
            "boundary_index": self.boundary_index,
            "units": self.to_rows(),
        }


def compute_unit_sams(
    layer_features, init_mask, jobs: int | None = None
) -> list[SegmentationAbilityMap | None]:
    """Segment every 1-channel slice; degenerate units come back as None."""
    fm = as_feature_map(layer_features)

    def run(channel: int):
        try:
            _, sam = protoseg(extract_unit(fm, channel), init_mask)
            return sam
        except EmptyClassError:
            return None

    return _run_items(range(fm.channels), run, jobs)


def split_active_inertia(sorted_scores: Sequence[float]) -> int:
    """Boundary index at the largest consecutive gap of descending scores.

    Ties go to the first maximal gap.  The active group is everything before
    the returned index."""
    scores = np.asarray([float(s) for s in sorted_scores], dtype=np.float64)
    if scores.size < 2:
        raise TooFewUnitsError(f"need at least 2 scores to split, got {scores.size}")
    if np.any(scores[:-1] < scores[1:]):
        raise ValueError("scores must be sorted in descending order")
    gaps = scores[:-1] - scores[1:]
    return int(np.argmax(gaps)) + 1


def unit_sweep(
    layer_features,
    init_mask,
    g,
    positive_class: int = 1,
    jobs: int | None = None,
    sams: Sequence[SegmentationAbilityMap | None] | None = None,
) -> UnitSweepReport:
    """Per-unit segmentation scores against ``g``, sorted descending.

    Pass precomputed ``sams`` (from :func:`compute_unit_sams`) to avoid
    segmenting twice when the caller also wants a heatmap."""
    if sams is None:
        sams = compute_unit_sams(layer_features, init_mask, jobs=jobs)
    scored = []
    for unit_id, sam in enumerate(sams):
        if sam is None:
            scored.append(UnitScore(unit_id, None))
        else:
            scored.append(UnitScore(unit_id, sa_score(sam, g, positive_class=positive_class).value))
    # defined first, descending by score; ties and undefineds stay in unit order
    ordered = sorted(scored, key=lambda u: (u.sa is None, -(u.sa if u.sa is not None else 0.0), u.unit_id))
    defined = [u.sa for u in ordered if u.sa is not None]
    boundary = split_active_inertia(defined) if len(defined) >= 2 else None
    return UnitSweepReport(units=tuple(ordered), boundary_index=boundary)


def unit_heatmap(unit_sams: Iterable[SegmentationAbilityMap], positive_class: int = 1) -> np.ndarray:
    """Per-pixel mean of the positive-class indicator over unit segmentations."""
    sams = [s for s in unit_sams if s is not None]
    if not sams:
        raise EmptyInputError("heatmap needs at least one defined unit segmentation")
    shape = sams[0].labels.shape
    for sam in sams[1:]:
        if sam.labels.shape != shape:
            raise ShapeMismatchError(
                f"unit segmentations have mismatched shapes {shape} vs {sam.labels.shape}"
            )
    stack = np.stack([(sam.labels == positive_class) for sam in sams]).astype(np.float64)
    return stack.mean(axis=0)


# ---------------------------------------------------------------------------
# ranking and coverage


@dataclass(frozen=True)
class ImageMu:
    """One image's mean unit score over the last two layers."""

    image_id: str
    mu: float
    unit_count: int = 0


@dataclass(frozen=True)
class RankingEntry:
    rank: int
    image_id: str
    mu: float


@dataclass(frozen=True)
class RankingReport:
    entries: tuple[RankingEntry, ...]

    csv_fields = ("rank", "image_id", "mu")

    def to_rows(self) -> list[dict]:
        return [{"rank": e.rank, "image_id": e.image_id, "mu": e.mu} for e in self.entries]

    def to_jsonable(self) -> dict:
        return {"report": "rank", "entries": self.to_rows()}


def rank_images(mu_per_image) -> RankingReport:
    """Ascending by mean score: the least trustworthy image ranks first.

    Accepts a mapping of image id to score or a sequence of :class:`ImageMu`.
    Ties break by image id."""
    if isinstance(mu_per_image, Mapping):
        records = [ImageMu(str(k), float(v)) for k, v in mu_per_image.items()]
    else:
        records = list(mu_per_image)
    if not records:
        raise EmptyInputError("ranking needs at least one image")
    ordered = sorted(records, key=lambda r: (r.mu, r.image_id))
    entries = tuple(
        RankingEntry(rank=i + 1, image_id=r.image_id, mu=float(r.mu))
        for i, r in enumerate(ordered)
    )
    return RankingReport(entries=entries)


@dataclass(frozen=True)
class CoverageRecord:
    image_id: str
    mu: float
    dice: float | None = None


@dataclass(frozen=True)
class CoverageRow:
    coverage_pct: float
    retained_count: int
    mean_dice: float | None
    std_dice: float | None
    retained_ids: tuple[str, ...]
    rejected_ids: tuple[str, ...]


@dataclass(frozen=True)
class CoverageTable:
    rows: tuple[CoverageRow, ...]
    evaluation: bool

    csv_fields = ("coverage_pct", "retained_count", "mean_dice", "std_dice")

    def to_rows(self) -> list[dict]:
        return [
            {
                "coverage_pct": r.coverage_pct,
                "retained_count": r.retained_count,
                "mean_dice": r.mean_dice,
                "std_dice": r.std_dice,
            }
            for r in self.rows
        ]

    def to_jsonable(self) -> dict:
        return {
            "report": "coverage",
            "evaluation": self.evaluation,
            "rows": [
                {
                    "coverage_pct": r.coverage_pct,
                    "retained_count": r.retained_count,
                    "mean_dice": r.mean_dice,
                    "std_dice": r.std_dice,
                    "retained_ids": list(r.retained_ids),
                    "rejected_ids": list(r.rejected_ids),
                }
                for r in self.rows
            ],
        }


def _retained_count(coverage_pct: float, total: int) -> int:
    # exact rational ceiling; float percentages like 90.0 must not round up to 46/50
    return math.ceil(Fraction(coverage_pct) * total / 100)


def coverage_table(records: Sequence[CoverageRecord], coverages: Sequence[float]) -> CoverageTable:
    """Retain the highest-mu ceil(c * N) records per coverage c.

    With dice on every record (evaluation mode) rows carry mean and population
    std of retained dice; with dice on none (deployment mode) rows carry only
    the partition."""
    records = list(records)
    if not records:
        raise EmptyInputError("coverage table needs at least one record")
    if not coverages:
        raise EmptyInputError("coverage table needs at least one coverage percentage")
    with_dice = [r for r in records if r.dice is not None]
    if with_dice and len(with_dice) != len(records):
        raise ValueError("dice must be present on all records or on none")
    evaluation = bool(with_dice)
    for pct in coverages:
        if not 0.0 < pct <= 100.0:
            raise ValueError(f"coverage percentage must lie in (0, 100], got {pct}")
    ordered = sorted(records, key=lambda r: (-r.mu, r.image_id))
    rows = []
    for pct in coverages:
        keep = _retained_count(pct, len(ordered))
        retained = ordered[:keep]
        rejected = ordered[keep:]
        if evaluation:
            dice = np.asarray([r.dice for r in retained], dtype=np.float64)
            mean_d, std_d = float(dice.mean()), float(dice.std())
        else:
            mean_d = std_d = None
        rows.append(
            CoverageRow(
                coverage_pct=float(pct),
                retained_count=keep,
                mean_dice=mean_d,
                std_dice=std_d,
                retained_ids=tuple(r.image_id for r in retained),
                rejected_ids=tuple(r.image_id for r in rejected),
            )
        )
    return CoverageTable(rows=tuple(rows), evaluation=evaluation)


# ---------------------------------------------------------------------------
# manifest-driven mean scores and separableness


def _last_layers(image: ImageRef, last_n: int) -> list[LayerRef]:
    return list(image.layers[-last_n:]) if last_n else list(image.layers)


def image_mu_scores(
    man: AnalysisManifest,
    jobs: int | None = None,
    upsample_mode: str = "bilinear",
    last_n_layers: int = 2,
    positive_class: int = 1,
) -> tuple[list[ImageMu], list[str]]:
    """Mean unit score per image over the units of its last ``last_n_layers``
    layers, each unit scored against the image's own output mask.  Returns the
    per-image records plus error strings for images that failed."""

    def run(image: ImageRef):
        try:
            init = npyio.load_mask(image.output, soft_ok=True)
            if isinstance(init, np.ndarray):
                ref_h, ref_w = init.shape
                # scoring needs hard labels; soft outputs harden at 0.5
                reference = (init >= 0.5).astype(np.int64)
            else:
                ref_h, ref_w = init.spatial_shape
                reference = init
            sams: list[SegmentationAbilityMap | None] = []
            for layer in _last_layers(image, last_n_layers):
                fm = _load_layer_feature(layer)
                up = upsample(fm, ref_h, ref_w, mode=upsample_mode)
                sams.extend(compute_unit_sams(up, init, jobs=1))
            mu = mean_sa_score(sams, reference, positive_class=positive_class)
            return ImageMu(image.image_id, mu.mu, mu.unit_count), None
        except (ProtoSegError, OSError) as exc:
            return None, f"{image.image_id}: {_error_text(exc)}"

    results = _run_items(list(man.images), run, jobs)
    records = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    return records, errors


@dataclass(frozen=True)
class SeparablenessReport:
    records: tuple[GainRecord, ...]
    mean_gain: float | None
    errors: tuple[str, ...]

    csv_fields = ("image_id", "sa_input", "dice_output", "gain")

    def to_rows(self) -> list[dict]:
        return [
            {
                "image_id": r.image_id,
                "sa_input": r.sa_input,
                "dice_output": r.dice_output,
                "gain": r.d,
            }
            for r in self.records
        ]

    def to_jsonable(self) -> dict:
        return {
            "report": "separableness",
            "mean_gain": self.mean_gain,
            "records": self.to_rows(),
            "errors": list(self.errors),
        }


def separableness_sweep(
    man: AnalysisManifest,
    jobs: int | None = None,
    positive_class: int = 1,
) -> SeparablenessReport:
    """Per-image gain of the network output over segmenting the raw input."""

    def run(image: ImageRef):
        try:
            truth, init = _load_pair(image)
            x = npyio.load_feature(image.input)
            if x.spatial_shape != truth.spatial_shape:
                x = upsample(x, truth.height, truth.width)
            record = separableness(
                x, init, truth, image_id=image.image_id, positive_class=positive_class
            )
            return record, None
        except (ProtoSegError, OSError) as exc:
            return None, f"{image.image_id}: {_error_text(exc)}"

    results = _run_items(list(man.images), run, jobs)
    records = tuple(r for r, _ in results if r is not None)
    errors = tuple(e for _, e in results if e is not None)
    mean = float(np.mean([r.d for r in records])) if records else None
    return SeparablenessReport(records=records, mean_gain=mean, errors=errors)


# ---------------------------------------------------------------------------
# noise sweep


@dataclass(frozen=True)
class NoiseEntry:
    layer_index: int
    level: float
    mean_sa_diff: float | None
    count: int
    error_count: int


@dataclass(frozen=True)
class NoiseReport:
    entries: tuple[NoiseEntry, ...]
    errors: tuple[str, ...]

    csv_fields = ("layer_index", "level", "mean_sa_diff", "count", "error_count")

    def to_rows(self) -> list[dict]:
        return [
            {
                "layer_index": e.layer_index,
                "level": e.level,
                "mean_sa_diff": e.mean_sa_diff,
                "count": e.count,
                "error_count": e.error_count,
            }
            for e in self.entries
        ]

    def to_jsonable(self) -> dict:
        return {"report": "noise", "entries": self.to_rows(), "errors": list(self.errors)}


def _noise_rng(global_seed: int, image_id: str, layer_index: int, level: float) -> np.random.Generator:
    # stable per-item stream: independent of image/level ordering in the sweep
    level_bits = int(np.float64(level).view(np.uint64))
    image_bits = zlib.crc32(image_id.encode("utf-8"))
    seq = np.random.SeedSequence([global_seed, image_bits, layer_index, level_bits])
    return np.random.default_rng(seq)


def noise_sweep(
    man: AnalysisManifest,
    levels: Sequence[float],
    jobs: int | None = None,
    upsample_mode: str = "bilinear",
    positive_class: int = 1,
    global_seed: int | None = None,
) -> NoiseReport:
    """Mean change in layer score when features carry uniform noise in [-level, +level].

    Desk-scale mode: noise perturbs the stored feature dumps directly.  Each
    (image, layer, level) draw is seeded from the manifest's global seed, the
    image id, the layer index, and the level, so reports are byte-identical
    across runs and worker counts.  Level 0 is exactly 0 by construction.
    ``global_seed`` overrides the manifest's seed when given."""
    levels = [float(lv) for lv in levels]
    if not levels:
        raise EmptyInputError("noise sweep needs at least one level")
    for lv in levels:
        if not lv >= 0.0:
            raise ValueError(f"noise level must be >= 0, got {lv}")
    seed = man.global_seed if global_seed is None else global_seed
    items = [(img, layer) for img in man.images for layer in img.layers]

    def run(item):
        image, layer = item
        try:
            truth, init = _load_pair(image)
            fm = _load_layer_feature(layer)
            clean_up = upsample(fm, truth.height, truth.width, mode=upsample_mode)
            _, clean_sam = protoseg(clean_up, init)
            clean_sa = sa_score(clean_sam, truth, positive_class=positive_class).value
            diffs = []
            for level in levels:
                if level == 0.0:
                    diffs.append(0.0)
                    continue
                rng = _noise_rng(seed, image.image_id, layer.layer_index, level)
                noisy = fm.values + rng.uniform(-level, level, size=fm.values.shape)
                noisy_up = upsample(
                    FeatureMap(noisy, layer_id=fm.layer_id), truth.height, truth.width,
                    mode=upsample_mode,
                )
                _, noisy_sam = protoseg(noisy_up, init)
                noisy_sa = sa_score(noisy_sam, truth, positive_class=positive_class).value
                diffs.append(noisy_sa - clean_sa)
            return diffs, None
        except (ProtoSegError, OSError) as exc:
            return None, f"{image.image_id}/layer{layer.layer_index}: {_error_text(exc)}"

    results = _run_items(items, run, jobs)
    errors = tuple(e for _, e in results if e is not None)
    entries = []
    layer_indices = sorted({layer.layer_index for _, layer in items})
    for layer_index in layer_indices:
        rows = [
            diffs
            for (image, layer), (diffs, err) in zip(items, results)
            if layer.layer_index == layer_index and diffs is not None
        ]
        error_count = sum(
            1
            for (image, layer), (diffs, err) in zip(items, results)
            if layer.layer_index == layer_index and err is not None
        )
        for li, level in enumerate(levels):
            if rows:
                values = np.asarray([r[li] for r in rows], dtype=np.float64)
                mean = float(values.mean())
            else:
                mean = None
            entries.append(NoiseEntry(layer_index, level, mean, len(rows), error_count))
    return NoiseReport(entries=tuple(entries), errors=errors)
