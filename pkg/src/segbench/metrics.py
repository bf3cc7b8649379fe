"""Segmentation evaluation metrics and threshold-selection analysis.

Empty-mask conventions: Dice is 1 when both masks are empty and 0 when
exactly one is; HD95 is undefined (None) when either mask is empty and such
cases are excluded from distance statistics; RVD of an empty prediction
against a nonempty ground truth is 1. A lesion counts as detected when
Dice strictly exceeds 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .grid import GridMismatchError, Mask


@dataclass(frozen=True)
class CaseMetrics:
    """Per-case evaluation results; hd95_mm is None for missed lesions."""

    dice: float
    precision: float
    recall: float
    rvd: float
    hd95_mm: float | None
    detected: bool
    elapsed_s: float = 0.0

    def __post_init__(self):
        if self.detected != (self.dice > 0.5):
            raise ValueError("detected must equal dice > 0.5")

    def to_json(self) -> dict:
        return {
            "dice": self.dice,
            "precision": self.precision,
            "recall": self.recall,
            "rvd": self.rvd,
            "hd95_mm": self.hd95_mm,
            "detected": self.detected,
            "elapsed_s": self.elapsed_s,
        }


@dataclass(frozen=True)
class CurvePoint:
    """One operating point of the pooled voxel classification curves."""

    threshold: float
    precision: float
    recall: float
    fpr: float
    tpr: float
    f1: float


def _check_grids(pred: Mask, gt: Mask) -> None:
    if pred.grid != gt.grid:
        raise GridMismatchError("prediction and ground-truth grids differ")


def dice(pred: Mask, gt: Mask) -> float:
    """3D Dice similarity coefficient 2|P∩G|/(|P|+|G|); both empty -> 1."""
    _check_grids(pred, gt)
    p = int(np.count_nonzero(pred.data))
    g = int(np.count_nonzero(gt.data))
    if p == 0 and g == 0:
        return 1.0
    inter = int(np.count_nonzero(pred.data & gt.data))
    return 2.0 * inter / (p + g)


def precision_recall(pred: Mask, gt: Mask) -> tuple[float, float]:
    """Voxelwise (precision, recall) of a prediction against ground truth.

    An empty prediction has undefined precision; by convention it is
    reported as 0.0. An empty ground truth is an error: every case carries
    a lesion.
    """
    _check_grids(pred, gt)
    g = int(np.count_nonzero(gt.data))
    if g == 0:
        raise ValueError("ground truth mask is empty")
    p = int(np.count_nonzero(pred.data))
    inter = int(np.count_nonzero(pred.data & gt.data))
    precision = inter / p if p > 0 else 0.0
    return precision, inter / g


def rvd(pred: Mask, gt: Mask) -> float:
    """Unsigned relative volume difference |V_P - V_G| / V_G in physical mm^3."""
    _check_grids(pred, gt)
    vg = gt.volume_mm3
    if vg == 0:
        raise ValueError("ground truth mask is empty")
    return abs(pred.volume_mm3 - vg) / vg


def boundary_voxels(mask: Mask) -> np.ndarray:
    """(n, 3) z,y,x indices of mask voxels with a face-adjacent background neighbor.

    Voxels on the array border count as boundary (outside the grid is
    background).
    """
    m = mask.data
    interior = np.ones(m.shape, dtype=bool)
    for axis in range(3):
        fwd = np.roll(m, 1, axis=axis)
        bwd = np.roll(m, -1, axis=axis)
        # roll wraps around; border voxels get an out-of-grid (False) neighbor
        sl_first = [slice(None)] * 3
        sl_first[axis] = slice(0, 1)
        sl_last = [slice(None)] * 3
        sl_last[axis] = slice(-1, None)
        fwd[tuple(sl_first)] = False
        bwd[tuple(sl_last)] = False
        interior &= fwd & bwd
    return np.argwhere(m & ~interior)


def _percentile_linear(sorted_vals: np.ndarray, q: float) -> float:
    """Percentile by linear interpolation between order statistics."""
    n = sorted_vals.size
    if n == 1:
        return float(sorted_vals[0])
    pos = q / 100.0 * (n - 1)
    lo = int(np.floor(pos))
    hi = min(lo + 1, n - 1)
    frac = pos - lo
    return float(sorted_vals[lo] * (1.0 - frac) + sorted_vals[hi] * frac)


def hd95(pred: Mask, gt: Mask) -> float:
    """Symmetric 95th-percentile Hausdorff distance between mask boundaries, in mm.

    Distances are Euclidean between boundary voxel centers; the directed
    95th percentiles (linear interpolation) are combined with max. Both
    masks must be nonempty.
    """
    _check_grids(pred, gt)
    if pred.voxel_count == 0 or gt.voxel_count == 0:
        raise ValueError("hd95 is undefined for empty masks")
    sp = pred.grid.spacing
    # Rigid orientation preserves distances, so spacing-scaled index space
    # gives the same Euclidean metric as world space.
    a = boundary_voxels(pred)[:, ::-1] * sp
    b = boundary_voxels(gt)[:, ::-1] * sp
    tree_a = cKDTree(a)
    tree_b = cKDTree(b)
    d_ab = np.sort(tree_b.query(a, k=1)[0])
    d_ba = np.sort(tree_a.query(b, k=1)[0])
    return max(_percentile_linear(d_ab, 95.0), _percentile_linear(d_ba, 95.0))


def lesion_detected(pred: Mask, gt: Mask) -> bool:
    """True when Dice strictly exceeds 0.5."""
    return dice(pred, gt) > 0.5


def case_metrics(pred: Mask, gt: Mask, elapsed_s: float = 0.0) -> CaseMetrics:
    """All per-case metrics with the standard empty-mask conventions."""
    d = dice(pred, gt)
    p, r = precision_recall(pred, gt)
    v = rvd(pred, gt)
    h = hd95(pred, gt) if pred.voxel_count > 0 and gt.voxel_count > 0 else None
    return CaseMetrics(
        dice=d, precision=p, recall=r, rvd=v, hd95_mm=h, detected=d > 0.5, elapsed_s=elapsed_s
    )


def pr_roc_curves(scores, labels=None) -> tuple[list[CurvePoint], float, float]:
    """Pooled-voxel PR and ROC analysis.

    Accepts either an iterable of (score, label) pairs or separate arrays.
    One curve point per unique score, descending; a point's counts include
    every sample with score >= that threshold, so ties share a point.
    Returns (points, auc_pr, auc_roc); the ROC integral is anchored at
    (0, 0) and the PR integral at (0, precision of the first point).
    """
    if labels is None:
        pairs = list(scores)
        s = np.asarray([p[0] for p in pairs], dtype=np.float64)
        y = np.asarray([p[1] for p in pairs], dtype=bool)
    else:
        s = np.asarray(scores, dtype=np.float64)
        y = np.asarray(labels, dtype=bool)
    if s.size == 0:
        raise ValueError("no samples")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need at least one positive and one negative label")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    tp_cum = np.cumsum(y_sorted)
    fp_cum = np.cumsum(~y_sorted)
    # last index of each tie group = the point where score changes next
    boundary = np.flatnonzero(np.diff(s_sorted) != 0.0)
    last = np.concatenate([boundary, [s.size - 1]])

    thr = s_sorted[last]
    tp = tp_cum[last].astype(np.float64)
    fp = fp_cum[last].astype(np.float64)
    precision = tp / (tp + fp)
    recall = tp / n_pos
    fpr = fp / n_neg
    tpr = recall
    with np.errstate(invalid="ignore"):
        f1 = np.where(precision + recall > 0, 2 * precision * recall / (precision + recall), 0.0)

    points = [
        CurvePoint(float(thr[i]), float(precision[i]), float(recall[i]), float(fpr[i]), float(tpr[i]), float(f1[i]))
        for i in range(thr.size)
    ]
    auc_roc = float(np.trapezoid(np.concatenate([[0.0], tpr]), np.concatenate([[0.0], fpr])))
    auc_pr = float(np.trapezoid(np.concatenate([[precision[0]], precision]), np.concatenate([[0.0], recall])))
    return points, auc_pr, auc_roc


def select_threshold_max_f1(curve: list[CurvePoint]) -> float:
    """Threshold of the maximum-F1 curve point; ties go to the larger threshold."""
    if not curve:
        raise ValueError("empty curve")
    best = curve[0]
    for pt in curve[1:]:
        if pt.f1 > best.f1 or (pt.f1 == best.f1 and pt.threshold > best.threshold):
            best = pt
    return best.threshold


def curve_to_csv(points: list[CurvePoint]) -> str:
    """CSV export of curve points (the data behind the PR/ROC figures)."""
    lines = ["threshold,precision,recall,fpr,tpr,f1"]
    for p in points:
        lines.append(
            f"{p.threshold!r},{p.precision!r},{p.recall!r},{p.fpr!r},{p.tpr!r},{p.f1!r}"
        )
    return "\n".join(lines) + "\n"
