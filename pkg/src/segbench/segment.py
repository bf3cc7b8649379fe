"""Segmentation strategies: ROI cropping, seeded region growing, probability
thresholding, and the external-predictor protocol.

External predictors exchange data through files: a float32 NRRD volume in,
a float32 probability NRRD on the identical grid out, exit 0 on success.
The command is a template with ``{input}`` and ``{output}`` placeholders;
``SEGBENCH_PREDICTOR_TIMEOUT_S`` overrides the default 300 s timeout.
"""

from __future__ import annotations

import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import nrrdio
from ._kernels import region_grow as _region_grow_kernel
from .grid import (
    BoundingBox,
    EmptyIntersectionError,
    GridMismatchError,
    Mask,
    ProbabilityMap,
    Volume,
    crop,
    resample,
    znormalize,
)

ROI_MARGIN_MM = 10.0
PREDICTOR_RESAMPLE_MM = 0.5
DEFAULT_TIMEOUT_S = 300.0
TIMEOUT_ENV_VAR = "SEGBENCH_PREDICTOR_TIMEOUT_S"

# Auto region-growing tolerance as a fraction of the robust intensity range
# of the normalized ROI; wide enough to absorb speckle at the default phantom
# contrast, narrow enough not to leak across the lesion boundary.
AUTO_TOLERANCE_FRACTION = 0.35

PREDICTOR_KINDS = ("region_growing", "threshold_model", "external", "null")


class PredictorError(RuntimeError):
    """The predictor failed to produce a probability map."""


class ExternalPredictorError(PredictorError):
    """External command exited nonzero or produced unreadable output."""


class PredictorTimeoutError(PredictorError):
    """External command exceeded its timeout."""


@dataclass(frozen=True)
class SeedPoint:
    """A world-mm seed for region growing."""

    position_mm: tuple[float, float, float]

    def __post_init__(self):
        p = tuple(float(x) for x in self.position_mm)
        if len(p) != 3:
            raise ValueError("seed position must be a 3-vector")
        object.__setattr__(self, "position_mm", p)


@dataclass(frozen=True)
class PredictorHandle:
    """A named segmentation strategy plus its parameters.

    kinds:
      * ``region_growing``: params ``tolerance`` (float, optional: robust
        auto), ``connectivity`` (6|26, default 26), ``seed_mm`` (optional,
        default ROI center).
      * ``threshold_model``: probability = min-max normalized intensity.
      * ``external``: params ``command`` (template with {input}/{output}),
        ``timeout_s`` (optional).
      * ``null``: all-zero probability map (floor baseline).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PREDICTOR_KINDS:
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        p = dict(self.params)
        if self.kind == "region_growing":
            tol = p.get("tolerance")
            if tol is not None and float(tol) < 0:
                raise ValueError("tolerance must be >= 0")
            conn = int(p.get("connectivity", 26))
            if conn not in (6, 26):
                raise ValueError("connectivity must be 6 or 26")
            p["connectivity"] = conn
        elif self.kind == "external":
            cmd = p.get("command", "")
            if "{input}" not in cmd or "{output}" not in cmd:
                raise ValueError("external command template needs {input} and {output}")
            if "timeout_s" in p and float(p["timeout_s"]) <= 0:
                raise ValueError("timeout_s must be positive")
        elif self.kind in ("threshold_model", "null"):
            pass
        object.__setattr__(self, "params", p)


def roi_with_margin(tumor_box: BoundingBox, margin_mm: float, extent: BoundingBox) -> BoundingBox:
    """Expand a tumor box by a margin on all six faces, clipped to the extent."""
    if margin_mm < 0:
        raise ValueError("margin must be >= 0")
    expanded = tumor_box.expand(margin_mm)
    clipped = expanded.intersect(extent)
    if clipped is None:
        raise EmptyIntersectionError("ROI does not intersect the volume extent")
    return clipped


def region_grow(
    vol: Volume,
    seeds: list[SeedPoint],
    tolerance: float,
    connectivity: int = 26,
) -> Mask:
    """Seeded region growing under an intensity-similarity criterion.

    Grows from the seed voxels through ``connectivity``-adjacent voxels whose
    intensity is within ``tolerance`` of the mean seed intensity, then keeps
    the largest connected component (single-lesion setting).
    """
    if not seeds:
        raise ValueError("need at least one seed")
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    if connectivity not in (6, 26):
        raise ValueError("connectivity must be 6 or 26")
    extent = vol.grid.extent()
    idx = []
    for seed in seeds:
        if not extent.contains(seed.position_mm):
            raise ValueError(f"seed {seed.position_mm} outside the volume extent")
        v = vol.grid.world_to_voxel(np.asarray(seed.position_mm))
        i = np.clip(np.floor(v + 0.5).astype(np.int64), 0, np.asarray(vol.grid.dims) - 1)
        idx.append((int(i[2]), int(i[1]), int(i[0])))
    seed_idx = np.asarray(idx, dtype=np.int64)
    seed_mean = float(vol.data[seed_idx[:, 0], seed_idx[:, 1], seed_idx[:, 2]].mean())
    grown = _region_grow_kernel(vol.data, seed_idx, seed_mean - tolerance, seed_mean + tolerance, connectivity)
    return postprocess(Mask(vol.grid, grown))


def binarize(pmap: ProbabilityMap, threshold: float) -> Mask:
    """Mask of voxels with probability >= threshold."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must be in [0, 1]")
    return Mask(pmap.grid, pmap.data >= threshold)


def postprocess(mask: Mask) -> Mask:
    """Keep only the largest 26-connected component; empty stays empty."""
    if mask.voxel_count == 0:
        return mask
    labels, n = ndimage.label(mask.data, structure=np.ones((3, 3, 3), dtype=bool))
    if n <= 1:
        return mask
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return Mask(mask.grid, labels == int(sizes.argmax()))


def _prepare_roi(vol: Volume, roi: BoundingBox, resample_mm: float) -> Volume:
    """Crop to the ROI, resample isotropically, z-normalize."""
    cropped = crop(vol, roi)
    iso = resample(cropped, (resample_mm,) * 3, interpolation="trilinear")
    return znormalize(iso)


def _minmax_probability(vol: Volume) -> np.ndarray:
    lo = float(vol.data.min())
    hi = float(vol.data.max())
    if hi == lo:
        return np.zeros_like(vol.data)
    return (vol.data - lo) / (hi - lo)


def _auto_tolerance(vol: Volume) -> float:
    p1, p99 = np.percentile(vol.data, [1.0, 99.0])
    return AUTO_TOLERANCE_FRACTION * float(p99 - p1)


def _run_external(handle: PredictorHandle, prepared: Volume) -> ProbabilityMap:
    timeout = float(
        os.environ.get(TIMEOUT_ENV_VAR, handle.params.get("timeout_s", DEFAULT_TIMEOUT_S))
    )
    with tempfile.TemporaryDirectory(prefix="segbench_pred_") as tmp:
        in_path = Path(tmp) / "input.nrrd"
        out_path = Path(tmp) / "output.nrrd"
        nrrdio.write_volume(in_path, prepared)
        cmd = handle.params["command"].format(input=in_path, output=out_path)
        try:
            proc = subprocess.run(
                cmd, shell=True, capture_output=True, text=True, timeout=timeout
            )
        except subprocess.TimeoutExpired as e:
            raise PredictorTimeoutError(f"external predictor exceeded {timeout} s") from e
        if proc.returncode != 0:
            raise ExternalPredictorError(
                f"external predictor exited {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        try:
            pmap = nrrdio.read_probability_map(out_path)
        except (OSError, ValueError) as e:
            raise ExternalPredictorError(f"cannot read predictor output: {e}") from e
    if not pmap.grid.matches(prepared.grid, atol=1e-6):
        raise GridMismatchError("external predictor returned a map on a different grid")
    return pmap


def run_predictor(
    handle: PredictorHandle,
    vol: Volume,
    roi: BoundingBox,
    resample_mm: float = PREDICTOR_RESAMPLE_MM,
) -> tuple[ProbabilityMap, float]:
    """Run a predictor on the ROI of a volume.

    The volume is cropped to the ROI, resampled isotropically and
    z-normalized before dispatch; elapsed wall-clock covers dispatch to
    map-available. The input volume is never mutated and the returned map
    lives on the prepared (cropped/resampled) grid.
    """
    prepared = _prepare_roi(vol, roi, resample_mm)
    start = time.perf_counter()
    if handle.kind == "threshold_model":
        pmap = ProbabilityMap(prepared.grid, _minmax_probability(prepared))
    elif handle.kind == "null":
        pmap = ProbabilityMap(prepared.grid, np.zeros(prepared.grid.shape))
    elif handle.kind == "region_growing":
        tol = handle.params.get("tolerance")
        tol = float(tol) if tol is not None else _auto_tolerance(prepared)
        seed_mm = handle.params.get("seed_mm")
        seed = SeedPoint(tuple(seed_mm) if seed_mm is not None else tuple(roi.center))
        mask = region_grow(prepared, [seed], tol, handle.params["connectivity"])
        pmap = ProbabilityMap(prepared.grid, mask.data.astype(np.float64))
    else:
        pmap = _run_external(handle, prepared)
    elapsed = time.perf_counter() - start
    return pmap, elapsed
