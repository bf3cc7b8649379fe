"""Tracked 2D frames and tomographic reconstruction onto a regular grid.

Reconstruction is pixel-nearest-neighbor binning with mean compounding and
a bounded hole-filling step. The per-voxel summation runs in a fixed
voxel-major order (samples sorted by voxel, then value), which makes the
output bitwise independent of frame order and thread count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._kernels import bin_mean, hole_fill
from .grid import Grid, Mask, RigidTransform, Volume


@dataclass(frozen=True)
class TrackedFrame:
    """One 2D image plus its tracked pose (frame plane -> world mm).

    Pixel (u, v) = (column, row) sits at local position
    ``(u * pixel_spacing[0], v * pixel_spacing[1], 0)``; the pose maps local
    to world coordinates.
    """

    pixels: np.ndarray
    pixel_spacing: tuple[float, float]
    pose: RigidTransform
    timestamp: float = 0.0

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError(f"pixels must be a nonempty 2D array, got shape {px.shape}")
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        sp = (float(self.pixel_spacing[0]), float(self.pixel_spacing[1]))
        if sp[0] <= 0 or sp[1] <= 0:
            raise ValueError(f"pixel_spacing must be positive, got {sp}")
        object.__setattr__(self, "pixels", px)
        object.__setattr__(self, "pixel_spacing", sp)

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols)."""
        return self.pixels.shape

    def pixel_world_positions(self) -> np.ndarray:
        """World mm of every pixel center, shape (rows*cols, 3), row-major."""
        rows, cols = self.pixels.shape
        u = np.arange(cols, dtype=np.float64) * self.pixel_spacing[0]
        v = np.arange(rows, dtype=np.float64) * self.pixel_spacing[1]
        uu, vv = np.meshgrid(u, v)  # (rows, cols)
        local = np.column_stack([uu.ravel(), vv.ravel(), np.zeros(uu.size)])
        return self.pose.apply(local)

    def corner_world_positions(self) -> np.ndarray:
        rows, cols = self.pixels.shape
        du, dv = self.pixel_spacing
        local = np.array(
            [
                [0.0, 0.0, 0.0],
                [(cols - 1) * du, 0.0, 0.0],
                [0.0, (rows - 1) * dv, 0.0],
                [(cols - 1) * du, (rows - 1) * dv, 0.0],
            ]
        )
        return self.pose.apply(local)


@dataclass(frozen=True)
class Sweep:
    """Ordered tracked frames from one probe pass."""

    frames: tuple[TrackedFrame, ...]
    probe_id: str = ""

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("sweep needs at least one frame")
        ts = [f.timestamp for f in frames]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("frame timestamps must be nondecreasing")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)


DEFAULT_SPACING_MM = 0.5

HOLE_FILL_MIN_NEIGHBORS = 7
HOLE_FILL_PASSES = 2


def output_grid(sweep: Sweep, spacing=DEFAULT_SPACING_MM) -> Grid:
    """Axis-aligned grid covering all frame pixels, padded one voxel per side.

    Voxel centers span the pixel AABB expanded by exactly one spacing on each
    side; orientation is identity.
    """
    sp = np.broadcast_to(np.asarray(spacing, dtype=np.float64), (3,)).copy()
    if np.any(sp <= 0):
        raise ValueError("spacing must be positive")
    corners = np.vstack([f.corner_world_positions() for f in sweep.frames])
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    origin = lo - sp
    # ceil keeps at least one full voxel of padding beyond the far corner
    dims = np.ceil((hi - lo) / sp - 1e-9).astype(int) + 3
    return Grid(tuple(dims), sp, origin)


def reconstruct(sweep: Sweep, spacing=DEFAULT_SPACING_MM) -> tuple[Volume, Mask]:
    """Reconstruct a volume from a tracked sweep.

    Every pixel contributes to its nearest voxel; multiply-hit voxels store
    the arithmetic mean. Then up to two hole-filling passes assign unfilled
    voxels with at least 7 filled 26-neighbors the mean of those neighbors.
    Returns the volume and the mask of voxels filled by either stage.
    """
    grid = output_grid(sweep, spacing)
    nx, ny, nz = grid.dims
    idx_parts = []
    val_parts = []
    for frame in sweep.frames:
        pos = frame.pixel_world_positions()
        vox = np.floor(grid.world_to_voxel(pos) + 0.5).astype(np.int64)
        flat = (vox[:, 2] * ny + vox[:, 1]) * nx + vox[:, 0]
        idx_parts.append(flat)
        val_parts.append(frame.pixels.ravel())
    idx = np.concatenate(idx_parts)
    vals = np.concatenate(val_parts)
    order = np.lexsort((vals, idx))
    mean, count = bin_mean(idx[order], vals[order], grid.n_voxels)
    values = mean.reshape(grid.shape)
    filled = (count > 0).reshape(grid.shape)
    values, filled = hole_fill(values, filled, HOLE_FILL_MIN_NEIGHBORS, HOLE_FILL_PASSES)
    return Volume(grid, values), Mask(grid, filled)


# ---------------------------------------------------------------------------
# On-disk sweep format: <dir>/sweep.json plus one float32 raw image per frame.

def save_sweep(directory, sweep: Sweep) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, frame in enumerate(sweep.frames):
        name = f"frame_{i:04d}.raw"
        rows, cols = frame.shape
        pose = np.hstack([frame.pose.rotation, frame.pose.translation[:, None]])
        entries.append(
            {
                "file": name,
                "dims": [cols, rows],
                "pose": [float(x) for x in pose.ravel()],  # row-major 3x4
                "timestamp": frame.timestamp,
            }
        )
        (d / name).write_bytes(frame.pixels.astype("<f4").tobytes())
    meta = {
        "probe_id": sweep.probe_id,
        "pixel_spacing": list(sweep.frames[0].pixel_spacing),
        "frames": entries,
    }
    (d / "sweep.json").write_text(json.dumps(meta, indent=1))


def load_sweep(directory) -> Sweep:
    d = Path(directory)
    meta_path = d / "sweep.json"
    if not meta_path.is_file():
        raise ValueError(f"{directory}: no sweep.json")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{meta_path}: invalid JSON ({e})") from e
    spacing = tuple(meta["pixel_spacing"])
    frames = []
    for entry in meta["frames"]:
        cols, rows = entry["dims"]
        raw = (d / entry["file"]).read_bytes()
        if len(raw) < rows * cols * 4:
            raise ValueError(f"{entry['file']}: truncated frame data")
        pixels = np.frombuffer(raw[: rows * cols * 4], dtype="<f4").reshape(rows, cols)
        pose = np.asarray(entry["pose"], dtype=np.float64).reshape(3, 4)
        frames.append(
            TrackedFrame(
                pixels.astype(np.float64),
                spacing,
                RigidTransform(pose[:, :3], pose[:, 3]),
                timestamp=float(entry.get("timestamp", 0.0)),
            )
        )
    return Sweep(tuple(frames), probe_id=meta.get("probe_id", ""))
