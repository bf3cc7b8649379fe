"""Synthetic liver-like phantoms with a single embedded ellipsoidal lesion.

Stands in for clinical sweep data: ground truth is known analytically, and a
simulated tracked sweep over the phantom exercises the reconstruction path.
Speckle is modeled as multiplicative log-normal noise; no acoustic realism is
claimed. All randomness flows through explicit seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .grid import BoundingBox, Grid, Mask, RigidTransform, Volume, sample_trilinear
from .sweep import Sweep, TrackedFrame

DEFAULT_VOXEL_MM = (0.5, 0.5, 0.5)

# Typical tracked-sweep lengths on intraoperative systems.
FRAMES_RANGE = (38, 95)

# Liver-metastasis size envelope: equivalent diameters around a ~16 mm median.
LESION_DIAMETER_RANGE_MM = (10.1, 40.6)


@dataclass(frozen=True)
class PhantomSpec:
    """Parameters of one phantom volume.

    The phantom occupies world [0, extent] per axis; intensity is
    ``background + contrast * indicator(ellipsoid)`` with the boundary
    smoothed by a Gaussian and multiplicative speckle applied on top.
    ``lesion_contrast`` is signed: positive is hyperechoic, negative
    hypoechoic.
    """

    volume_extent_mm: tuple[float, float, float]
    background_level: float
    lesion_center_mm: tuple[float, float, float]
    lesion_radii_mm: tuple[float, float, float]
    lesion_contrast: float
    speckle_sigma: float = 0.0
    boundary_blur_sigma_mm: float = 0.0
    rng_seed: int = 0
    spacing_mm: tuple[float, float, float] = DEFAULT_VOXEL_MM

    def __post_init__(self):
        ext = np.asarray(self.volume_extent_mm, dtype=np.float64)
        c = np.asarray(self.lesion_center_mm, dtype=np.float64)
        r = np.asarray(self.lesion_radii_mm, dtype=np.float64)
        sp = np.asarray(self.spacing_mm, dtype=np.float64)
        if np.any(ext <= 0) or np.any(sp <= 0):
            raise ValueError("extent and spacing must be positive")
        if np.any(r <= 0):
            raise ValueError("lesion radii must be positive")
        if np.any(c - r < 0) or np.any(c + r > ext):
            raise ValueError("lesion ellipsoid must lie fully inside the extent")
        if self.speckle_sigma < 0 or self.boundary_blur_sigma_mm < 0:
            raise ValueError("noise parameters must be >= 0")

    def to_json(self) -> dict:
        return {
            "volume_extent_mm": list(self.volume_extent_mm),
            "background_level": self.background_level,
            "lesion_center_mm": list(self.lesion_center_mm),
            "lesion_radii_mm": list(self.lesion_radii_mm),
            "lesion_contrast": self.lesion_contrast,
            "speckle_sigma": self.speckle_sigma,
            "boundary_blur_sigma_mm": self.boundary_blur_sigma_mm,
            "rng_seed": self.rng_seed,
            "spacing_mm": list(self.spacing_mm),
        }

    @staticmethod
    def from_json(d: dict) -> "PhantomSpec":
        return PhantomSpec(
            volume_extent_mm=tuple(d["volume_extent_mm"]),
            background_level=d["background_level"],
            lesion_center_mm=tuple(d["lesion_center_mm"]),
            lesion_radii_mm=tuple(d["lesion_radii_mm"]),
            lesion_contrast=d["lesion_contrast"],
            speckle_sigma=d.get("speckle_sigma", 0.0),
            boundary_blur_sigma_mm=d.get("boundary_blur_sigma_mm", 0.0),
            rng_seed=d.get("rng_seed", 0),
            spacing_mm=tuple(d.get("spacing_mm", DEFAULT_VOXEL_MM)),
        )


def save_phantom_spec(path, spec: PhantomSpec) -> None:
    Path(path).write_text(json.dumps(spec.to_json(), indent=1))


def load_phantom_spec(path) -> PhantomSpec:
    return PhantomSpec.from_json(json.loads(Path(path).read_text()))


def make_phantom(spec: PhantomSpec) -> tuple[Volume, Mask]:
    """Generate (intensity volume, exact ground-truth mask) from a spec.

    The mask is the pre-blur ellipsoid indicator sampled at voxel centers, so
    its voxel volume tracks (4/3)*pi*a*b*c up to digitization error.
    """
    ext = np.asarray(spec.volume_extent_mm, dtype=np.float64)
    sp = np.asarray(spec.spacing_mm, dtype=np.float64)
    dims = np.maximum(np.rint(ext / sp).astype(int), 1)
    grid = Grid(tuple(dims), sp, sp / 2.0)

    nx, ny, nz = grid.dims
    x = (np.arange(nx) + 0.5) * sp[0]
    y = (np.arange(ny) + 0.5) * sp[1]
    z = (np.arange(nz) + 0.5) * sp[2]
    c = np.asarray(spec.lesion_center_mm)
    r = np.asarray(spec.lesion_radii_mm)
    dx2 = ((x - c[0]) / r[0]) ** 2
    dy2 = ((y - c[1]) / r[1]) ** 2
    dz2 = ((z - c[2]) / r[2]) ** 2
    # (nz, ny, nx) field of normalized squared radii
    rr = dz2[:, None, None] + dy2[None, :, None] + dx2[None, None, :]
    indicator = rr <= 1.0

    shape = indicator.astype(np.float64)
    if spec.boundary_blur_sigma_mm > 0:
        shape = gaussian_filter(shape, sigma=(spec.boundary_blur_sigma_mm / sp)[::-1])
    intensity = spec.background_level + spec.lesion_contrast * shape
    if spec.speckle_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        intensity = intensity * np.exp(rng.normal(0.0, spec.speckle_sigma, size=intensity.shape))
    return Volume(grid, intensity), Mask(grid, indicator)


def lesion_bounding_box(spec: PhantomSpec) -> BoundingBox:
    """World AABB of the lesion ellipsoid (the 'tumor box' a user would draw)."""
    c = np.asarray(spec.lesion_center_mm)
    r = np.asarray(spec.lesion_radii_mm)
    return BoundingBox(c - r, c + r)


@dataclass(frozen=True)
class SweepSpec:
    """Parameters of a simulated linear probe sweep.

    Frames are planes spanned by ``u_dir``/``v_dir`` whose pixel (0, 0)
    corner marches from ``start_mm`` to ``end_mm``; ``tilt_deg`` rotates the
    frame plane progressively about the march direction across the sweep.
    ``n_frames=None`` samples the clinical range [38, 95].
    """

    frame_size_mm: tuple[float, float]
    start_mm: tuple[float, float, float]
    end_mm: tuple[float, float, float]
    u_dir: tuple[float, float, float] = (1.0, 0.0, 0.0)
    v_dir: tuple[float, float, float] = (0.0, 1.0, 0.0)
    n_frames: int | None = None
    pixel_spacing_mm: tuple[float, float] = (0.5, 0.5)
    tilt_deg: float = 0.0
    pose_noise_mm: float = 0.0
    pose_noise_deg: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_frames is not None and self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if self.frame_size_mm[0] <= 0 or self.frame_size_mm[1] <= 0:
            raise ValueError("frame size must be positive")
        u = np.asarray(self.u_dir, dtype=np.float64)
        v = np.asarray(self.v_dir, dtype=np.float64)
        if abs(np.dot(u / np.linalg.norm(u), v / np.linalg.norm(v))) > 1e-9:
            raise ValueError("u_dir and v_dir must be orthogonal")


def _rotation_about(axis: np.ndarray, angle_rad: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    k = axis / np.linalg.norm(axis)
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle_rad) * kx + (1 - np.cos(angle_rad)) * (kx @ kx)


def simulate_sweep(vol: Volume, spec: SweepSpec) -> Sweep:
    """Sample tracked frames off a volume along a parameterized trajectory.

    Frame pixels are trilinear resamplings of the volume on the true frame
    plane; the recorded pose is the true pose perturbed by the configured
    translation/rotation noise. Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n = spec.n_frames if spec.n_frames is not None else int(rng.integers(FRAMES_RANGE[0], FRAMES_RANGE[1] + 1))
    u = np.asarray(spec.u_dir, dtype=np.float64)
    u /= np.linalg.norm(u)
    v = np.asarray(spec.v_dir, dtype=np.float64)
    v /= np.linalg.norm(v)
    start = np.asarray(spec.start_mm, dtype=np.float64)
    end = np.asarray(spec.end_mm, dtype=np.float64)
    march = end - start
    march_n = march / np.linalg.norm(march) if np.linalg.norm(march) > 0 else np.cross(u, v)

    du, dv = spec.pixel_spacing_mm
    cols = int(round(spec.frame_size_mm[0] / du)) + 1
    rows = int(round(spec.frame_size_mm[1] / dv)) + 1
    uu, vv = np.meshgrid(np.arange(cols) * du, np.arange(rows) * dv)

    frames = []
    any_inside = False
    for k in range(n):
        t = k / (n - 1) if n > 1 else 0.0
        rot = _rotation_about(march_n, np.deg2rad(spec.tilt_deg) * t)
        uk, vk = rot @ u, rot @ v
        pos = start + march * t
        true_pose = RigidTransform(np.column_stack([uk, vk, np.cross(uk, vk)]), pos)

        world = pos + uu.ravel()[:, None] * uk + vv.ravel()[:, None] * vk
        coords = vol.grid.world_to_voxel(world)
        pixels = sample_trilinear(vol, coords).reshape(rows, cols)
        dims = np.asarray(vol.grid.dims, dtype=np.float64)
        if np.any(np.all((coords >= -0.5) & (coords <= dims - 0.5), axis=1)):
            any_inside = True

        pose = true_pose
        if spec.pose_noise_mm > 0 or spec.pose_noise_deg > 0:
            jitter_t = rng.normal(0.0, spec.pose_noise_mm, size=3) if spec.pose_noise_mm > 0 else np.zeros(3)
            if spec.pose_noise_deg > 0:
                axis = rng.normal(size=3)
                axis /= np.linalg.norm(axis)
                jitter_r = _rotation_about(axis, np.deg2rad(rng.normal(0.0, spec.pose_noise_deg)))
            else:
                jitter_r = np.eye(3)
            pose = RigidTransform(jitter_r @ true_pose.rotation, true_pose.translation + jitter_t)
        frames.append(TrackedFrame(pixels, (du, dv), pose, timestamp=float(k)))

    if not any_inside:
        raise ValueError("sweep trajectory does not intersect the volume extent")
    return Sweep(tuple(frames), probe_id="sim")


def default_sweep_for(vol: Volume, n_frames: int | None = None, rng_seed: int = 0, **overrides) -> SweepSpec:
    """Parallel-slice sweep covering the whole volume along z."""
    ext = vol.grid.extent()
    size = ext.size
    spec = SweepSpec(
        frame_size_mm=(float(size[0]), float(size[1])),
        start_mm=tuple(ext.min_mm),
        end_mm=(float(ext.min_mm[0]), float(ext.min_mm[1]), float(ext.max_mm[2])),
        n_frames=n_frames,
        rng_seed=rng_seed,
    )
    return replace(spec, **overrides) if overrides else spec
