"""Desk-scale workbench for tracked-ultrasound tumor segmentation studies.

Covers the pipeline end to end on synthetic phantoms: tracked-sweep volume
reconstruction, ROI cropping, pluggable segmentation (seeded region growing,
intensity thresholding, external predictors), max-F1 threshold selection,
and the evaluation/statistics suite, plus an interactive HTTP service.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .grid import (
    BoundingBox,
    EmptyIntersectionError,
    Grid,
    GridMismatchError,
    Mask,
    ProbabilityMap,
    RigidTransform,
    Volume,
    crop,
    embed_mask,
    resample,
    resample_mask,
    sample_trilinear,
    znormalize,
)
from .metrics import (
    CaseMetrics,
    CurvePoint,
    case_metrics,
    dice,
    hd95,
    lesion_detected,
    pr_roc_curves,
    precision_recall,
    rvd,
    select_threshold_max_f1,
)
from .phantom import PhantomSpec, SweepSpec, lesion_bounding_box, make_phantom, simulate_sweep
from .segment import (
    PredictorHandle,
    SeedPoint,
    binarize,
    postprocess,
    region_grow,
    roi_with_margin,
    run_predictor,
)
from .stats import (
    PairedSample,
    SummaryQuartiles,
    bonferroni,
    quartiles,
    significance_report,
    wilcoxon_signed_rank,
)
from .sweep import Sweep, TrackedFrame, output_grid, reconstruct

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "BoundingBox",
    "CaseMetrics",
    "CurvePoint",
    "EmptyIntersectionError",
    "Grid",
    "GridMismatchError",
    "Mask",
    "PairedSample",
    "PhantomSpec",
    "PredictorHandle",
    "ProbabilityMap",
    "RigidTransform",
    "SeedPoint",
    "SummaryQuartiles",
    "Sweep",
    "SweepSpec",
    "TrackedFrame",
    "Volume",
    "binarize",
    "bonferroni",
    "case_metrics",
    "crop",
    "dice",
    "embed_mask",
    "hd95",
    "lesion_bounding_box",
    "lesion_detected",
    "make_phantom",
    "output_grid",
    "postprocess",
    "pr_roc_curves",
    "precision_recall",
    "quartiles",
    "reconstruct",
    "region_grow",
    "resample",
    "resample_mask",
    "roi_with_margin",
    "run_predictor",
    "rvd",
    "sample_trilinear",
    "select_threshold_max_f1",
    "significance_report",
    "simulate_sweep",
    "wilcoxon_signed_rank",
    "znormalize",
]
