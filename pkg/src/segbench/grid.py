"""Volumetric grid types, rigid transforms, and resampling primitives.

Conventions used throughout the package:

* World coordinates are right-handed and expressed in millimeters.
* Voxel data is stored x-fastest: arrays have shape ``(nz, ny, nx)`` and are
  indexed ``data[z, y, x]``.
* Voxel-center model: ``origin`` is the world position of the center of voxel
  ``(0, 0, 0)``; the grid's world extent spans half a voxel beyond the first
  and last centers.
* Trilinear samples outside the extent return 0, consistent with the
  empty-space fill of reconstructed volumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import trilinear_sample


class GridMismatchError(ValueError):
    """Two grids that must be identical are not."""


class EmptyIntersectionError(ValueError):
    """A box does not intersect the grid extent."""


def _as_vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64).reshape(-1)
    if a.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {a.shape}")
    return a


def _check_rotation(r: np.ndarray, name: str) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got {r.shape}")
    if not np.allclose(r.T @ r, np.eye(3), atol=1e-9):
        raise ValueError(f"{name} is not orthonormal")
    if np.linalg.det(r) < 0:
        raise ValueError(f"{name} has determinant -1 (reflection)")
    return r


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation, mapping local coordinates to world mm."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _frozen(_check_rotation(self.rotation, "rotation")))
        object.__setattr__(self, "translation", _frozen(_as_vec3(self.translation, "translation")))

    def apply(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = pts @ self.rotation.T + self.translation
        return out[0] if np.asarray(points).ndim == 1 else out

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in world millimeters, ``min <= max`` componentwise."""

    min_mm: np.ndarray
    max_mm: np.ndarray

    def __post_init__(self):
        lo = _frozen(_as_vec3(self.min_mm, "min_mm"))
        hi = _frozen(_as_vec3(self.max_mm, "max_mm"))
        if np.any(lo > hi):
            raise ValueError(f"box min {lo} exceeds max {hi}")
        object.__setattr__(self, "min_mm", lo)
        object.__setattr__(self, "max_mm", hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min_mm + self.max_mm)

    @property
    def size(self) -> np.ndarray:
        return self.max_mm - self.min_mm

    def expand(self, margin_mm: float) -> "BoundingBox":
        if margin_mm < 0:
            raise ValueError("margin must be >= 0")
        return BoundingBox(self.min_mm - margin_mm, self.max_mm + margin_mm)

    def intersect(self, other: "BoundingBox") -> "BoundingBox | None":
        lo = np.maximum(self.min_mm, other.min_mm)
        hi = np.minimum(self.max_mm, other.max_mm)
        if np.any(lo > hi):
            return None
        return BoundingBox(lo, hi)

    def contains(self, point) -> bool:
        p = _as_vec3(point, "point")
        return bool(np.all(p >= self.min_mm) and np.all(p <= self.max_mm))

    def to_json(self) -> dict:
        return {"min": self.min_mm.tolist(), "max": self.max_mm.tolist()}

    @staticmethod
    def from_json(d: dict) -> "BoundingBox":
        return BoundingBox(d["min"], d["max"])


@dataclass(frozen=True)
class Grid:
    """Regular 3D voxel lattice: dims (nx, ny, nz), spacing/origin in mm.

    ``orientation`` columns are the world directions of the voxel x, y, z
    axes; it must be a proper rotation.
    """

    dims: tuple[int, int, int]
    spacing: np.ndarray
    origin: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise ValueError(f"dims must be 3 positive integers, got {self.dims}")
        sp = _as_vec3(self.spacing, "spacing")
        if np.any(sp <= 0):
            raise ValueError(f"spacing must be positive, got {sp}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", _frozen(sp))
        object.__setattr__(self, "origin", _frozen(_as_vec3(self.origin, "origin")))
        object.__setattr__(
            self, "orientation", _frozen(_check_rotation(self.orientation, "orientation"))
        )

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape (nz, ny, nx) matching the x-fastest storage order."""
        return (self.dims[2], self.dims[1], self.dims[0])

    @property
    def n_voxels(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def voxel_volume_mm3(self) -> float:
        return float(np.prod(self.spacing))

    def voxel_to_world(self, voxels) -> np.ndarray:
        """World mm of continuous voxel coordinates (x, y, z order)."""
        v = np.atleast_2d(np.asarray(voxels, dtype=np.float64))
        out = (v * self.spacing) @ self.orientation.T + self.origin
        return out[0] if np.asarray(voxels).ndim == 1 else out

    def world_to_voxel(self, points) -> np.ndarray:
        """Continuous voxel coordinates of world-mm points; inverse of voxel_to_world."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = ((p - self.origin) @ self.orientation) / self.spacing
        return out[0] if np.asarray(points).ndim == 1 else out

    def extent(self) -> BoundingBox:
        """World AABB of the voxel volume (half a voxel beyond the outer centers)."""
        lo = np.full(3, -0.5)
        hi = np.asarray(self.dims, dtype=np.float64) - 0.5
        corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
        world = self.voxel_to_world(corners)
        return BoundingBox(world.min(axis=0), world.max(axis=0))

    def is_axis_aligned(self) -> bool:
        return bool(np.array_equal(self.orientation, np.eye(3)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.dims == other.dims
            and np.array_equal(self.spacing, other.spacing)
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.orientation, other.orientation)
        )

    def __hash__(self):
        return hash((self.dims, self.spacing.tobytes(), self.origin.tobytes(), self.orientation.tobytes()))

    def matches(self, other: "Grid", atol: float = 0.0) -> bool:
        """Metadata equality, optionally with tolerance for externally produced grids."""
        if self.dims != other.dims:
            return False
        if atol == 0.0:
            return self == other
        return (
            np.allclose(self.spacing, other.spacing, atol=atol)
            and np.allclose(self.origin, other.origin, atol=atol)
            and np.allclose(self.orientation, other.orientation, atol=atol)
        )


def _check_data(grid: Grid, data: np.ndarray, dtype) -> np.ndarray:
    arr = np.asarray(data, dtype=dtype)
    if arr.shape != grid.shape:
        raise ValueError(f"data shape {arr.shape} does not match grid shape {grid.shape}")
    return _frozen(arr)


@dataclass(frozen=True)
class Volume:
    """Scalar intensity field on a Grid; data indexed [z, y, x]."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_data(self.grid, self.data, np.float64))


@dataclass(frozen=True)
class Mask:
    """Per-voxel boolean field sharing its parent volume's grid."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _check_data(self.grid, self.data, np.bool_))

    @property
    def voxel_count(self) -> int:
        return int(np.count_nonzero(self.data))

    @property
    def volume_mm3(self) -> float:
        return self.voxel_count * self.grid.voxel_volume_mm3


@dataclass(frozen=True)
class ProbabilityMap:
    """Per-voxel probability in [0, 1] sharing its parent volume's grid."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError(f"probabilities outside [0, 1]: range [{arr.min()}, {arr.max()}]")
        object.__setattr__(self, "data", _check_data(self.grid, arr, np.float64))


def sample_trilinear(vol: Volume, voxel_coords: np.ndarray) -> np.ndarray:
    """Trilinear samples at continuous voxel coordinates (x, y, z columns).

    Samples beyond the grid extent (more than half a voxel outside the outer
    centers) return 0; inside the extent, missing neighbors contribute 0.
    """
    coords = np.ascontiguousarray(voxel_coords, dtype=np.float64)
    return trilinear_sample(vol.data, coords)


def sample_nearest(data: np.ndarray, voxel_coords: np.ndarray, fill=0):
    """Nearest-neighbor samples at continuous voxel coordinates; out-of-extent -> fill."""
    nz, ny, nx = data.shape
    c = np.atleast_2d(voxel_coords)
    idx = np.floor(c + 0.5).astype(np.int64)
    dims = np.array([nx, ny, nz])
    inside = np.all((c >= -0.5) & (c <= dims - 0.5), axis=1)
    np.clip(idx, 0, dims - 1, out=idx)
    out = np.full(c.shape[0], fill, dtype=data.dtype)
    if np.any(inside):
        sel = idx[inside]
        out[inside] = data[sel[:, 2], sel[:, 1], sel[:, 0]]
    return out


def resample(vol: Volume, target_spacing, interpolation: str = "trilinear") -> Volume:
    """Resample onto a grid with the requested spacing covering the same extent.

    The origin and orientation are preserved; the new dimension along each
    axis is ``round(dims * spacing / target_spacing)`` so the world extent is
    conserved to within one voxel. Trilinear is for intensities, nearest for
    masks (see :func:`resample_mask`).
    """
    tsp = _as_vec3(target_spacing, "target_spacing")
    if np.any(tsp <= 0):
        raise ValueError("target_spacing must be positive")
    if interpolation not in ("trilinear", "nearest"):
        raise ValueError(f"unknown interpolation {interpolation!r}")
    old = np.asarray(vol.grid.dims, dtype=np.float64)
    if np.any(np.rint(old * vol.grid.spacing / tsp) < 1):
        raise ValueError("degenerate resample: output would have a zero-voxel axis")
    # Sample positions stay inside the input center hull, so interpolation is
    # always a convex combination of input samples (no edge fade-out).
    new_dims = np.floor((old - 1) * vol.grid.spacing / tsp + 1e-9).astype(int) + 1
    grid = Grid(tuple(new_dims), tsp, vol.grid.origin, vol.grid.orientation)
    if grid == vol.grid:
        return Volume(grid, vol.data)
    coords = _grid_center_coords(grid) * (tsp / vol.grid.spacing)
    if interpolation == "trilinear":
        vals = trilinear_sample(vol.data, coords)
    else:
        vals = sample_nearest(vol.data, coords, fill=0.0)
    return Volume(grid, vals.reshape(grid.shape))


def resample_mask(mask: Mask, target_spacing) -> Mask:
    """Nearest-neighbor resample of a mask; output stays binary."""
    as_vol = Volume(mask.grid, mask.data.astype(np.float64))
    out = resample(as_vol, target_spacing, interpolation="nearest")
    return Mask(out.grid, out.data > 0.5)


def _grid_center_coords(grid: Grid) -> np.ndarray:
    """All voxel-center coordinates of ``grid`` as an (n, 3) xyz array, x fastest."""
    nx, ny, nz = grid.dims
    zz, yy, xx = np.meshgrid(
        np.arange(nz, dtype=np.float64),
        np.arange(ny, dtype=np.float64),
        np.arange(nx, dtype=np.float64),
        indexing="ij",
    )
    return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])


def znormalize(vol: Volume) -> Volume:
    """Zero-mean unit-variance normalization over the nonzero voxels.

    Reconstructed volumes fill unvisited space with zeros; those voxels are
    excluded from the statistics and stay exactly 0 in the output.
    """
    data = vol.data
    nonzero = data != 0.0
    vals = data[nonzero]
    if vals.size < 2 or np.unique(vals).size < 2:
        raise ValueError("znormalize requires >= 2 distinct nonzero values")
    mean = float(vals.mean())
    std = float(vals.std())
    if std == 0.0:
        raise ValueError("znormalize: nonzero region has zero variance")
    out = np.zeros_like(data)
    out[nonzero] = (vals - mean) / std
    return Volume(vol.grid, out)


def _crop_index_ranges(grid: Grid, box: BoundingBox) -> tuple[np.ndarray, np.ndarray]:
    """Half-open per-axis index ranges of voxel centers inside box ∩ extent.

    Inclusion is ``min <= center < max`` componentwise. For non-axis-aligned
    grids the selected set need not be a cuboid; the index-aligned hull of the
    selected centers is returned so the result stays a regular grid.
    """
    clipped = box.intersect(grid.extent())
    if clipped is None:
        raise EmptyIntersectionError(f"box {box.to_json()} does not intersect grid extent")
    dims = np.asarray(grid.dims)
    eps = 1e-9
    if grid.is_axis_aligned():
        t_lo = (clipped.min_mm - grid.origin) / grid.spacing
        t_hi = (clipped.max_mm - grid.origin) / grid.spacing
        lo = np.maximum(np.ceil(t_lo - eps).astype(np.int64), 0)
        hi = np.minimum(np.floor(t_hi - eps).astype(np.int64) + 1, dims)
        if np.any(lo >= hi):
            raise EmptyIntersectionError("no voxel centers inside the box")
        return lo, hi
    # Rotated grid: bound candidates by the box corners in voxel space, then
    # test each candidate center's world position.
    corners = np.array(
        [
            [x, y, z]
            for x in (clipped.min_mm[0], clipped.max_mm[0])
            for y in (clipped.min_mm[1], clipped.max_mm[1])
            for z in (clipped.min_mm[2], clipped.max_mm[2])
        ]
    )
    vc = grid.world_to_voxel(corners)
    lo = np.maximum(np.ceil(vc.min(axis=0) - eps).astype(np.int64), 0)
    hi = np.minimum(np.floor(vc.max(axis=0) + eps).astype(np.int64) + 1, dims)
    axes = [np.arange(lo[i], hi[i], dtype=np.float64) for i in range(3)]
    if any(a.size == 0 for a in axes):
        raise EmptyIntersectionError("no voxel centers inside the box")
    zz, yy, xx = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
    centers = grid.voxel_to_world(np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()]))
    inside = np.all((centers >= clipped.min_mm - eps) & (centers < clipped.max_mm - eps), axis=1)
    if not np.any(inside):
        raise EmptyIntersectionError("no voxel centers inside the box")
    sel = np.column_stack([xx.ravel()[inside], yy.ravel()[inside], zz.ravel()[inside]]).astype(np.int64)
    return sel.min(axis=0), sel.max(axis=0) + 1


def _crop_grid(grid: Grid, box: BoundingBox) -> tuple[Grid, tuple[slice, slice, slice]]:
    lo, hi = _crop_index_ranges(grid, box)
    new_origin = grid.voxel_to_world(lo.astype(np.float64))
    new_grid = Grid(tuple(int(h - l) for l, h in zip(lo, hi)), grid.spacing, new_origin, grid.orientation)
    slices = (slice(lo[2], hi[2]), slice(lo[1], hi[1]), slice(lo[0], hi[0]))
    return new_grid, slices


def crop(image, box: BoundingBox):
    """Crop a Volume/Mask/ProbabilityMap to the voxels whose centers lie in the box.

    The box is clipped to the grid extent first; an empty intersection raises
    :class:`EmptyIntersectionError`. The output origin is the world position
    of the first kept voxel.
    """
    new_grid, slices = _crop_grid(image.grid, box)
    data = image.data[slices]
    return type(image)(new_grid, data)


def embed_mask(mask: Mask, target: Grid) -> Mask:
    """Resample a (typically ROI-cropped) mask onto a reference grid.

    Each target voxel center takes the nearest mask voxel's value; centers
    outside the mask's extent are background. When the two lattices coincide
    this reduces to an exact paste.
    """
    if mask.grid == target:
        return mask
    coords = mask.grid.world_to_voxel(target.voxel_to_world(_grid_center_coords(target)))
    vals = sample_nearest(mask.data, coords, fill=False)
    return Mask(target, vals.reshape(target.shape))
