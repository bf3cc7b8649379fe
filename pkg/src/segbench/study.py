"""Batch orchestration: dataset manifests, threshold calibration, evaluation.

Reports are split into deterministic artifacts (metric tables, significance,
per-case metrics) and wall-clock timing sidecars: given identical seeds and
deterministic predictors, every report file except ``timings.csv`` and the
timing summary is byte-identical across runs.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nrrdio
from .grid import BoundingBox, Mask, Volume, embed_mask
from .metrics import CaseMetrics, CurvePoint, case_metrics, curve_to_csv, pr_roc_curves, select_threshold_max_f1
from .phantom import (
    LESION_DIAMETER_RANGE_MM,
    PhantomSpec,
    lesion_bounding_box,
    make_phantom,
    save_phantom_spec,
)
from .segment import ROI_MARGIN_MM, PredictorHandle, binarize, postprocess, roi_with_margin, run_predictor
from .stats import SignificanceRow, SummaryQuartiles, quartiles, significance_report

SPLITS = ("train", "validation", "test_retro", "test_pro")

# Pooled validation scores are quantized to this many levels before the
# PR/ROC sweep; continuous speckle would otherwise make every voxel its own
# threshold and the exported curve uselessly large.
SCORE_QUANTIZATION_LEVELS = 1000

METRIC_NAMES = ("dice", "precision", "recall", "rvd", "hd95")

# Default appearance of generated phantoms: hyperechoic lesions over a
# uniform parenchyma, mild speckle, thin blurred boundary.
DATASET_BACKGROUND = 60.0
DATASET_CONTRAST_RANGE = (25.0, 45.0)
DATASET_SPECKLE_SIGMA = 0.05
DATASET_BLUR_SIGMA_MM = 0.4
DATASET_VOLUME_RANGE_ML = (165.0, 350.0)
LESION_CLEARANCE_MM = 6.5


@dataclass(frozen=True)
class CaseManifest:
    """One case of a study dataset; paths are relative to the manifest file."""

    case_id: str
    volume_path: str
    gt_mask_path: str
    tumor_box: BoundingBox
    split: str

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")


@dataclass(frozen=True)
class Manifest:
    root: Path
    cases: tuple[CaseManifest, ...]

    def of_split(self, *splits: str) -> list[CaseManifest]:
        return [c for c in self.cases if c.split in splits]

    def volume_file(self, case: CaseManifest) -> Path:
        return self.root / case.volume_path

    def gt_file(self, case: CaseManifest) -> Path:
        return self.root / case.gt_mask_path


def save_manifest(path, manifest: Manifest) -> None:
    payload = {
        "cases": [
            {
                "case_id": c.case_id,
                "volume": c.volume_path,
                "gt_mask": c.gt_mask_path,
                "tumor_box": c.tumor_box.to_json(),
                "split": c.split,
            }
            for c in manifest.cases
        ]
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_manifest(path) -> Manifest:
    p = Path(path)
    payload = json.loads(p.read_text())
    cases = tuple(
        CaseManifest(
            case_id=e["case_id"],
            volume_path=e["volume"],
            gt_mask_path=e["gt_mask"],
            tumor_box=BoundingBox.from_json(e["tumor_box"]),
            split=e["split"],
        )
        for e in payload["cases"]
    )
    ids = [c.case_id for c in cases]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate case ids in manifest")
    return Manifest(root=p.parent, cases=cases)


def _sample_phantom_spec(rng: np.random.Generator, seed: int) -> PhantomSpec:
    """Random phantom within the clinical envelope (volume mL, lesion diameter)."""
    d_lo, d_hi = LESION_DIAMETER_RANGE_MM
    diameter = rng.uniform(d_lo, d_hi)
    aniso = rng.uniform(0.85, 1.15, size=3)
    aniso /= np.prod(aniso) ** (1.0 / 3.0)  # keep the equivalent diameter
    radii = 0.5 * diameter * aniso

    target_ml = rng.uniform(*DATASET_VOLUME_RANGE_ML)
    shape = rng.uniform(0.85, 1.15, size=3)
    shape /= np.prod(shape) ** (1.0 / 3.0)
    extent = (target_ml * 1000.0) ** (1.0 / 3.0) * shape
    # Keep the lesion clear of the faces; cap the radii if the sampled
    # extent cannot host the largest lesions.
    radii = np.minimum(radii, extent / 2.0 - LESION_CLEARANCE_MM - 0.5)
    center = np.array(
        [
            rng.uniform(r + LESION_CLEARANCE_MM, e - r - LESION_CLEARANCE_MM)
            for r, e in zip(radii, extent)
        ]
    )
    return PhantomSpec(
        volume_extent_mm=tuple(extent),
        background_level=DATASET_BACKGROUND,
        lesion_center_mm=tuple(center),
        lesion_radii_mm=tuple(radii),
        lesion_contrast=rng.uniform(*DATASET_CONTRAST_RANGE),
        speckle_sigma=DATASET_SPECKLE_SIGMA,
        boundary_blur_sigma_mm=DATASET_BLUR_SIGMA_MM,
        rng_seed=seed,
    )


def make_dataset(out_dir, n_train: int, n_val: int, n_test: int, seed: int = 0) -> Path:
    """Generate a phantom dataset with the requested split sizes.

    Writes one volume + ground-truth mask pair per case plus ``manifest.json``
    and returns the manifest path. Fully deterministic for a fixed seed.
    """
    if min(n_train, n_val, n_test) < 0:
        raise ValueError("split sizes must be >= 0")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    splits = ["train"] * n_train + ["validation"] * n_val + ["test_retro"] * n_test
    cases = []
    for i, split in enumerate(splits):
        case_id = f"case_{i:03d}"
        case_dir = out / "cases" / case_id
        case_dir.mkdir(parents=True, exist_ok=True)
        spec = _sample_phantom_spec(rng, seed=int(rng.integers(0, 2**31)))
        vol, gt = make_phantom(spec)
        nrrdio.write_volume(case_dir / "volume.nrrd", vol)
        nrrdio.write_mask(case_dir / "gt.nrrd", gt)
        save_phantom_spec(case_dir / "phantom.json", spec)
        cases.append(
            CaseManifest(
                case_id=case_id,
                volume_path=f"cases/{case_id}/volume.nrrd",
                gt_mask_path=f"cases/{case_id}/gt.nrrd",
                tumor_box=lesion_bounding_box(spec),
                split=split,
            )
        )
    manifest = Manifest(root=out, cases=tuple(cases))
    path = out / "manifest.json"
    save_manifest(path, manifest)
    return path


@dataclass(frozen=True)
class CalibrationResult:
    threshold: float
    f1: float
    auc_pr: float
    auc_roc: float
    curve: tuple[CurvePoint, ...]


def _case_roi(vol: Volume, case: CaseManifest) -> BoundingBox:
    return roi_with_margin(case.tumor_box, ROI_MARGIN_MM, vol.grid.extent())


def calibrate_threshold(
    manifest: Manifest, predictor: PredictorHandle, out_dir=None
) -> CalibrationResult:
    """Pick the max-F1 threshold on pooled validation voxels.

    Reads only validation-split cases. Every voxel of every validation
    probability map is pooled with its ground-truth label (scores quantized
    to 1/1000), the PR/ROC curves are computed once over the pool, and the
    max-F1 threshold is selected. Persists threshold + curves when
    ``out_dir`` is given.
    """
    val_cases = manifest.of_split("validation")
    if not val_cases:
        raise ValueError("validation split is empty")
    scores = []
    labels = []
    for case in val_cases:
        vol = nrrdio.read_volume(manifest.volume_file(case))
        gt = nrrdio.read_mask(manifest.gt_file(case))
        try:
            pmap, _ = run_predictor(predictor, vol, _case_roi(vol, case))
        except Exception as e:
            raise RuntimeError(f"predictor failed on validation case {case.case_id}: {e}") from e
        gt_roi = embed_mask(gt, pmap.grid)
        q = np.rint(pmap.data * SCORE_QUANTIZATION_LEVELS) / SCORE_QUANTIZATION_LEVELS
        scores.append(q.ravel())
        labels.append(gt_roi.data.ravel())
    pooled_scores = np.concatenate(scores)
    pooled_labels = np.concatenate(labels)
    curve, auc_pr, auc_roc = pr_roc_curves(pooled_scores, pooled_labels)
    threshold = select_threshold_max_f1(curve)
    f1 = max(p.f1 for p in curve)
    result = CalibrationResult(threshold, f1, auc_pr, auc_roc, tuple(curve))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "threshold.json").write_text(
            json.dumps(
                {
                    "threshold": threshold,
                    "f1": f1,
                    "auc_pr": auc_pr,
                    "auc_roc": auc_roc,
                    "n_validation_cases": len(val_cases),
                },
                indent=1,
            )
        )
        (out / "curve_pr_roc.csv").write_text(curve_to_csv(list(curve)))
    return result


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    method: str
    metrics: CaseMetrics
    error: str | None = None


@dataclass(frozen=True)
class StudyReport:
    """Aggregated study outcome: quartile tables, significance, detection."""

    methods: tuple[str, ...]
    case_ids: tuple[str, ...]
    results: tuple[CaseResult, ...]
    metric_quartiles: dict = field(default_factory=dict)  # metric -> method -> SummaryQuartiles|None
    timing_quartiles: dict = field(default_factory=dict)  # method -> SummaryQuartiles
    detection_sensitivity: dict = field(default_factory=dict)  # method -> float
    significance: tuple[SignificanceRow, ...] = ()
    failures: tuple[tuple[str, str, str], ...] = ()  # (case_id, method, error)


MISS = CaseMetrics(dice=0.0, precision=0.0, recall=0.0, rvd=1.0, hd95_mm=None, detected=False)


def _evaluate_case(
    manifest: Manifest, case: CaseManifest, method: str, handle: PredictorHandle, threshold: float
) -> CaseResult:
    try:
        vol = nrrdio.read_volume(manifest.volume_file(case))
        gt = nrrdio.read_mask(manifest.gt_file(case))
        pmap, pred_s = run_predictor(handle, vol, _case_roi(vol, case))
        t0 = time.perf_counter()
        mask = postprocess(binarize(pmap, threshold))
        elapsed = pred_s + (time.perf_counter() - t0)
        full = embed_mask(mask, gt.grid)
        return CaseResult(case.case_id, method, case_metrics(full, gt, elapsed_s=elapsed))
    except Exception as e:  # failures are data, not crashes
        return CaseResult(case.case_id, method, MISS, error=f"{type(e).__name__}: {e}")


def evaluate(
    manifest: Manifest,
    methods: dict[str, PredictorHandle],
    threshold: float,
    splits: tuple[str, ...] = ("test_retro",),
    workers: int = 1,
    alpha: float = 0.05,
) -> StudyReport:
    """Run every method over the test cases and aggregate the study report.

    A failed case scores as a miss (dice 0, rvd 1, not detected) and is
    listed in the failures table; evaluation always continues.
    """
    cases = manifest.of_split(*splits)
    if not cases:
        raise ValueError(f"no cases in splits {splits}")
    if not methods:
        raise ValueError("no methods to evaluate")
    jobs = [(case, name) for case in cases for name in methods]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    lambda job: _evaluate_case(manifest, job[0], job[1], methods[job[1]], threshold),
                    jobs,
                )
            )
    else:
        results = [_evaluate_case(manifest, c, n, methods[n], threshold) for c, n in jobs]
    return aggregate_results(results, alpha=alpha)


def aggregate_results(results: list[CaseResult], alpha: float = 0.05) -> StudyReport:
    """Build the study report (quartiles, significance, detection) from per-case results."""
    results = sorted(results, key=lambda r: (r.case_id, r.method))
    method_names = sorted({r.method for r in results})
    by_method: dict[str, list[CaseResult]] = {name: [] for name in method_names}
    for r in results:
        by_method[r.method].append(r)

    metric_quartiles: dict[str, dict[str, SummaryQuartiles | None]] = {}
    for metric in METRIC_NAMES:
        metric_quartiles[metric] = {}
        for name in method_names:
            vals = [_metric_value(r.metrics, metric) for r in by_method[name]]
            vals = [v for v in vals if v is not None]
            metric_quartiles[metric][name] = quartiles(vals) if vals else None

    timing_quartiles = {
        name: quartiles([r.metrics.elapsed_s for r in by_method[name]]) for name in method_names
    }
    detection = {
        name: sum(r.metrics.detected for r in by_method[name]) / len(by_method[name])
        for name in method_names
    }

    tables: dict[str, dict[str, dict[str, float]]] = {}
    for metric in METRIC_NAMES:
        tables[metric] = {
            name: {r.case_id: _metric_value(r.metrics, metric) for r in by_method[name]}
            for name in method_names
        }
    _align_hd95(tables)

    n_pairs = max(1, len(method_names) * (len(method_names) - 1) // 2)
    significance = tuple(significance_report(tables, alpha=alpha, n_comparisons=n_pairs))

    failures = tuple((r.case_id, r.method, r.error) for r in results if r.error)
    return StudyReport(
        methods=tuple(method_names),
        case_ids=tuple(sorted({r.case_id for r in results})),
        results=tuple(results),
        metric_quartiles=metric_quartiles,
        timing_quartiles=timing_quartiles,
        detection_sensitivity=detection,
        significance=significance,
        failures=failures,
    )


def _metric_value(m: CaseMetrics, metric: str):
    return {
        "dice": m.dice,
        "precision": m.precision,
        "recall": m.recall,
        "rvd": m.rvd,
        "hd95": m.hd95_mm,
    }[metric]


def _align_hd95(tables: dict) -> None:
    """Keep only cases where every method produced a segmentation.

    HD95 is undefined for misses; paired tests need complete pairs, so cases
    missing for any method are dropped from the HD table.
    """
    hd = tables.get("hd95")
    if not hd:
        return
    keep: set | None = None
    for per_case in hd.values():
        defined = {cid for cid, v in per_case.items() if v is not None}
        keep = defined if keep is None else keep & defined
    if not keep:
        del tables["hd95"]
        return
    for name in hd:
        hd[name] = {cid: v for cid, v in hd[name].items() if cid in keep}
