"""Pure-NumPy implementations of the hot kernels.

Selected automatically when the compiled extension is unavailable; also the
reference the compiled kernels are tested against. All functions share their
signatures with ``_compiled``.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

# 26-neighborhood offsets in (dz, dy, dx) order, fixed so both backends and
# both connectivities traverse neighbors identically.
OFFSETS_26 = np.array(
    [
        (dz, dy, dx)
        for dz in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dx in (-1, 0, 1)
        if (dz, dy, dx) != (0, 0, 0)
    ],
    dtype=np.int64,
)
OFFSETS_6 = np.array(
    [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)], dtype=np.int64
)


def bin_mean(sorted_idx: np.ndarray, sorted_vals: np.ndarray, n_voxels: int):
    """Mean of values grouped by flat voxel index.

    Inputs must be lexsorted by (index, value); the per-voxel summation order
    is then fixed, which makes the result independent of how the samples were
    originally ordered.

    Returns (mean float64[n_voxels], count int64[n_voxels]); untouched voxels
    have mean 0 and count 0.
    """
    mean = np.zeros(n_voxels, dtype=np.float64)
    count = np.zeros(n_voxels, dtype=np.int64)
    if sorted_idx.size == 0:
        return mean, count
    starts = np.flatnonzero(np.diff(sorted_idx)) + 1
    starts = np.concatenate([[0], starts])
    uniq = sorted_idx[starts]
    sums = np.add.reduceat(sorted_vals, starts)
    cnts = np.diff(np.concatenate([starts, [sorted_idx.size]]))
    mean[uniq] = sums / cnts
    count[uniq] = cnts
    return mean, count


def hole_fill(values: np.ndarray, filled: np.ndarray, min_neighbors: int, passes: int):
    """Fill unfilled voxels having >= min_neighbors filled 26-neighbors.

    Each pass is synchronous: qualification and means use the filled state at
    the start of the pass, so the result is independent of traversal order.
    Returns (values, filled) as new arrays.
    """
    vals = values.astype(np.float64, copy=True)
    fill = filled.astype(bool, copy=True)
    for _ in range(passes):
        if fill.all():
            break
        nsum = np.zeros_like(vals)
        ncnt = np.zeros(vals.shape, dtype=np.int64)
        src = np.where(fill, vals, 0.0)
        fil = fill.astype(np.int64)
        for dz, dy, dx in OFFSETS_26:
            sl_dst, sl_src = _shift_slices(vals.shape, dz, dy, dx)
            nsum[sl_dst] += src[sl_src]
            ncnt[sl_dst] += fil[sl_src]
        grow = (~fill) & (ncnt >= min_neighbors)
        if not grow.any():
            break
        vals[grow] = nsum[grow] / ncnt[grow]
        fill |= grow
    return vals, fill


def _shift_slices(shape, dz, dy, dx):
    """Destination/source slice pairs so dst[z,y,x] sees src[z+dz, y+dy, x+dx]."""
    dst, src = [], []
    for n, d in zip(shape, (dz, dy, dx)):
        if d == 0:
            dst.append(slice(None))
            src.append(slice(None))
        elif d > 0:
            dst.append(slice(0, n - d))
            src.append(slice(d, n))
        else:
            dst.append(slice(-d, n))
            src.append(slice(0, n + d))
    return tuple(dst), tuple(src)


def region_grow(values: np.ndarray, seed_idx: np.ndarray, lo: float, hi: float, connectivity: int):
    """Flood fill from seed voxels through voxels with value in [lo, hi].

    ``seed_idx`` is an (n, 3) array of (z, y, x) indices. Seeds outside the
    intensity band are not included. Returns a boolean mask.
    """
    offsets = OFFSETS_26 if connectivity == 26 else OFFSETS_6
    nz, ny, nx = values.shape
    mask = np.zeros(values.shape, dtype=bool)
    seeds = np.atleast_2d(seed_idx).astype(np.int64)
    sv = values[seeds[:, 0], seeds[:, 1], seeds[:, 2]]
    ok = (sv >= lo) & (sv <= hi)
    frontier = np.unique(seeds[ok], axis=0)
    if frontier.size == 0:
        return mask
    mask[frontier[:, 0], frontier[:, 1], frontier[:, 2]] = True
    while frontier.shape[0]:
        cand = frontier[:, None, :] + offsets[None, :, :]
        cand = cand.reshape(-1, 3)
        inb = (
            (cand[:, 0] >= 0) & (cand[:, 0] < nz)
            & (cand[:, 1] >= 0) & (cand[:, 1] < ny)
            & (cand[:, 2] >= 0) & (cand[:, 2] < nx)
        )
        cand = cand[inb]
        if cand.size == 0:
            break
        flat = (cand[:, 0] * ny + cand[:, 1]) * nx + cand[:, 2]
        flat = np.unique(flat)
        z, rem = np.divmod(flat, ny * nx)
        y, x = np.divmod(rem, nx)
        new = ~mask[z, y, x] & (values[z, y, x] >= lo) & (values[z, y, x] <= hi)
        z, y, x = z[new], y[new], x[new]
        mask[z, y, x] = True
        frontier = np.column_stack([z, y, x])
    return mask


def trilinear_sample(values: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Trilinear interpolation at continuous voxel coordinates (x, y, z columns).

    Points beyond half a voxel outside the outer centers return 0; inside,
    neighbors that fall off the grid contribute 0 (zero padding).
    """
    nz, ny, nx = values.shape
    c = np.atleast_2d(coords)
    x, y, z = c[:, 0], c[:, 1], c[:, 2]
    inside = (
        (x >= -0.5) & (x <= nx - 0.5)
        & (y >= -0.5) & (y <= ny - 0.5)
        & (z >= -0.5) & (z <= nz - 0.5)
    )
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    z0 = np.floor(z).astype(np.int64)
    fx = x - x0
    fy = y - y0
    fz = z - z0
    out = np.zeros(c.shape[0], dtype=np.float64)
    for dz in (0, 1):
        wz = np.where(dz == 1, fz, 1.0 - fz)
        zi = z0 + dz
        for dy in (0, 1):
            wy = np.where(dy == 1, fy, 1.0 - fy)
            yi = y0 + dy
            for dx in (0, 1):
                wx = np.where(dx == 1, fx, 1.0 - fx)
                xi = x0 + dx
                valid = (xi >= 0) & (xi < nx) & (yi >= 0) & (yi < ny) & (zi >= 0) & (zi < nz)
                w = wz * wy * wx
                contrib = np.where(
                    valid & (w != 0.0),
                    values[np.clip(zi, 0, nz - 1), np.clip(yi, 0, ny - 1), np.clip(xi, 0, nx - 1)],
                    0.0,
                )
                out += w * contrib
    out[~inside] = 0.0
    return out
