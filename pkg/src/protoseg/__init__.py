"""Parameter-free prototype segmentation and segmentation-ability analysis.

The core turns a feature map plus an initial mask into a segmentation with no
learned parameters: per-class prototypes are mask-weighted mean feature
vectors, and each pixel joins the class of its nearest prototype (softmax over
negated squared distances).  On top of that sit overlap scoring, a
hand-derived gradient kernel for the soft-Dice loss, batch analysis pipelines
(layer/unit sweeps, ranking, coverage, noise), tensor-dump and manifest I/O,
rendering, and a scikit-learn style estimator.
"""

from .core import (
    compute_prototypes,
    extract_unit,
    hard_segment,
    mask_weights,
    probability_map,
    protoseg,
    upsample,
)
from .diffkernel import (
    GradMode,
    finite_diff_check,
    protoseg_backward,
    protoseg_loss,
    soft_dice_loss,
)
from .errors import (
    DanglingReferenceError,
    EmptyClassError,
    EmptyInputError,
    MalformedHeaderError,
    ManifestError,
    NonFiniteValueError,
    ProtoSegError,
    SchemaViolationError,
    ShapeMismatchError,
    ShapeOverflowError,
    SyntheticSpecError,
    TensorFormatError,
    TooFewUnitsError,
    TruncatedPayloadError,
    UndefinedScoreError,
    UnitIndexError,
    UnsupportedDtypeError,
)
from .estimator import ProtoSegmenter
from .metrics import (
    GainRecord,
    MeanSaScore,
    SaScore,
    mean_gain,
    mean_sa_score,
    sa_difference,
    sa_score,
    separableness,
)
from .analysis import (
    CoverageRecord,
    CoverageTable,
    ImageMu,
    LayerSweepReport,
    NoiseReport,
    RankingReport,
    SeparablenessReport,
    UnitSweepReport,
    compute_unit_sams,
    coverage_table,
    image_mu_scores,
    layer_sweep,
    noise_sweep,
    rank_images,
    resolve_jobs,
    separableness_sweep,
    split_active_inertia,
    unit_heatmap,
    unit_sweep,
)
from .manifest import AnalysisManifest, ImageRef, LayerRef, load_manifest
from .npyio import load_feature, load_mask, read_tensor, write_mask, write_tensor
from .reports import save_report
from .render import render_curve, render_heatmap
from .synthetic import SyntheticSpec, gen_synthetic
from .types import (
    FeatureMap,
    LabelMask,
    ProbabilityMap,
    PrototypeSet,
    SegmentationAbilityMap,
    as_feature_map,
    as_label_mask,
)

__version__ = "1.0.0"

__all__ = [
    "AnalysisManifest",
    "CoverageRecord",
    "CoverageTable",
    "DanglingReferenceError",
    "EmptyClassError",
    "EmptyInputError",
    "FeatureMap",
    "GainRecord",
    "GradMode",
    "ImageMu",
    "ImageRef",
    "LabelMask",
    "LayerRef",
    "LayerSweepReport",
    "MalformedHeaderError",
    "ManifestError",
    "MeanSaScore",
    "NoiseReport",
    "NonFiniteValueError",
    "ProbabilityMap",
    "ProtoSegError",
    "ProtoSegmenter",
    "PrototypeSet",
    "RankingReport",
    "SaScore",
    "SchemaViolationError",
    "SegmentationAbilityMap",
    "SeparablenessReport",
    "ShapeMismatchError",
    "ShapeOverflowError",
    "SyntheticSpec",
    "SyntheticSpecError",
    "TensorFormatError",
    "TooFewUnitsError",
    "TruncatedPayloadError",
    "UndefinedScoreError",
    "UnitIndexError",
    "UnitSweepReport",
    "UnsupportedDtypeError",
    "as_feature_map",
    "as_label_mask",
    "compute_prototypes",
    "compute_unit_sams",
    "coverage_table",
    "extract_unit",
    "finite_diff_check",
    "gen_synthetic",
    "hard_segment",
    "image_mu_scores",
    "layer_sweep",
    "load_feature",
    "load_manifest",
    "load_mask",
    "mask_weights",
    "mean_gain",
    "mean_sa_score",
    "noise_sweep",
    "probability_map",
    "protoseg",
    "protoseg_backward",
    "protoseg_loss",
    "rank_images",
    "read_tensor",
    "render_curve",
    "render_heatmap",
    "resolve_jobs",
    "sa_difference",
    "sa_score",
    "save_report",
    "separableness",
    "separableness_sweep",
    "soft_dice_loss",
    "split_active_inertia",
    "unit_heatmap",
    "unit_sweep",
    "upsample",
    "write_mask",
    "write_tensor",
]
