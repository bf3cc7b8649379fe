# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the NumPy kernels (see numpy_backend for the contracts)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

NAME = "compiled"

cdef int[78] _OFF26
cdef int[18] _OFF6
cdef int _i, _dz, _dy, _dx
_i = 0
for _dz in range(-1, 2):
    for _dy in range(-1, 2):
        for _dx in range(-1, 2):
            if _dz == 0 and _dy == 0 and _dx == 0:
                continue
            _OFF26[3 * _i] = _dz
            _OFF26[3 * _i + 1] = _dy
            _OFF26[3 * _i + 2] = _dx
            _i += 1
_OFF6[:] = [-1, 0, 0, 1, 0, 0, 0, -1, 0, 0, 1, 0, 0, 0, -1, 0, 0, 1]


def bin_mean(const cnp.int64_t[::1] sorted_idx, const cnp.float64_t[::1] sorted_vals, Py_ssize_t n_voxels):
    """Mean of values grouped by flat voxel index (inputs lexsorted by index, value)."""
    mean_arr = np.zeros(n_voxels, dtype=np.float64)
    count_arr = np.zeros(n_voxels, dtype=np.int64)
    cdef cnp.float64_t[::1] mean = mean_arr
    cdef cnp.int64_t[::1] count = count_arr
    cdef Py_ssize_t i, n = sorted_idx.shape[0]
    cdef cnp.int64_t j
    for i in range(n):
        j = sorted_idx[i]
        mean[j] += sorted_vals[i]
        count[j] += 1
    for i in range(n_voxels):
        if count[i] > 0:
            mean[i] /= count[i]
    return mean_arr, count_arr


def hole_fill(values, filled, int min_neighbors, int passes):
    """Fill unfilled voxels having >= min_neighbors filled 26-neighbors (synchronous passes)."""
    vals_arr = np.ascontiguousarray(values, dtype=np.float64).copy()
    fill_arr = np.ascontiguousarray(filled, dtype=np.uint8).copy()
    cdef cnp.float64_t[:, :, ::1] vals = vals_arr
    cdef cnp.uint8_t[:, :, ::1] fill = fill_arr
    cdef Py_ssize_t nz = vals.shape[0], ny = vals.shape[1], nx = vals.shape[2]
    cdef Py_ssize_t z, y, x, k, zz, yy, xx
    cdef int p, cnt
    cdef double s
    cdef cnp.float64_t[:, :, ::1] src
    cdef cnp.uint8_t[:, :, ::1] sfill
    for p in range(passes):
        src_arr = vals_arr.copy()
        sfill_arr = fill_arr.copy()
        src = src_arr
        sfill = sfill_arr
        grew = 0
        for z in range(nz):
            for y in range(ny):
                for x in range(nx):
                    if sfill[z, y, x]:
                        continue
                    s = 0.0
                    cnt = 0
                    for k in range(26):
                        zz = z + _OFF26[3 * k]
                        yy = y + _OFF26[3 * k + 1]
                        xx = x + _OFF26[3 * k + 2]
                        if zz < 0 or zz >= nz or yy < 0 or yy >= ny or xx < 0 or xx >= nx:
                            continue
                        if sfill[zz, yy, xx]:
                            s += src[zz, yy, xx]
                            cnt += 1
                    if cnt >= min_neighbors:
                        vals[z, y, x] = s / cnt
                        fill[z, y, x] = 1
                        grew = 1
        if not grew:
            break
    return vals_arr, fill_arr.astype(bool)


def region_grow(values, seed_idx, double lo, double hi, int connectivity):
    """Flood fill from (z, y, x) seeds through voxels with value in [lo, hi]."""
    vals_arr = np.ascontiguousarray(values, dtype=np.float64)
    cdef const cnp.float64_t[:, :, ::1] vals = vals_arr
    cdef Py_ssize_t nz = vals.shape[0], ny = vals.shape[1], nx = vals.shape[2]
    mask_arr = np.zeros((nz, ny, nx), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] mask = mask_arr
    cdef const cnp.int64_t[:, ::1] seeds = np.ascontiguousarray(np.atleast_2d(seed_idx), dtype=np.int64)
    cdef int n_off
    cdef int* off
    if connectivity == 26:
        n_off = 26
        off = _OFF26
    else:
        n_off = 6
        off = _OFF6
    # Explicit stack of flat indices; worst case every voxel is pushed once.
    stack_arr = np.empty(nz * ny * nx, dtype=np.int64)
    cdef cnp.int64_t[::1] stack = stack_arr
    cdef Py_ssize_t top = 0, i, k
    cdef cnp.int64_t z, y, x, zz, yy, xx, flat
    cdef double v
    for i in range(seeds.shape[0]):
        z = seeds[i, 0]
        y = seeds[i, 1]
        x = seeds[i, 2]
        v = vals[z, y, x]
        if lo <= v <= hi and not mask[z, y, x]:
            mask[z, y, x] = 1
            stack[top] = (z * ny + y) * nx + x
            top += 1
    while top > 0:
        top -= 1
        flat = stack[top]
        z = flat // (ny * nx)
        y = (flat // nx) % ny
        x = flat % nx
        for k in range(n_off):
            zz = z + off[3 * k]
            yy = y + off[3 * k + 1]
            xx = x + off[3 * k + 2]
            if zz < 0 or zz >= nz or yy < 0 or yy >= ny or xx < 0 or xx >= nx:
                continue
            if mask[zz, yy, xx]:
                continue
            v = vals[zz, yy, xx]
            if lo <= v <= hi:
                mask[zz, yy, xx] = 1
                stack[top] = (zz * ny + yy) * nx + xx
                top += 1
    return mask_arr.astype(bool)


def trilinear_sample(values, coords):
    """Trilinear interpolation at continuous voxel coords; 0 outside the extent."""
    vals_arr = np.ascontiguousarray(values, dtype=np.float64)
    coords_arr = np.ascontiguousarray(np.atleast_2d(coords), dtype=np.float64)
    cdef const cnp.float64_t[:, :, ::1] vals = vals_arr
    cdef const cnp.float64_t[:, ::1] c = coords_arr
    cdef Py_ssize_t nz = vals.shape[0], ny = vals.shape[1], nx = vals.shape[2]
    cdef Py_ssize_t n = c.shape[0], i
    out_arr = np.zeros(n, dtype=np.float64)
    cdef cnp.float64_t[::1] out = out_arr
    cdef double x, y, z, fx, fy, fz, wx, wy, wz, w, acc
    cdef cnp.int64_t x0, y0, z0, xi, yi, zi
    cdef int dx, dy, dz
    for i in range(n):
        x = c[i, 0]
        y = c[i, 1]
        z = c[i, 2]
        if x < -0.5 or x > nx - 0.5 or y < -0.5 or y > ny - 0.5 or z < -0.5 or z > nz - 0.5:
            continue
        x0 = <cnp.int64_t>floor(x)
        y0 = <cnp.int64_t>floor(y)
        z0 = <cnp.int64_t>floor(z)
        fx = x - x0
        fy = y - y0
        fz = z - z0
        acc = 0.0
        for dz in range(2):
            wz = fz if dz else 1.0 - fz
            zi = z0 + dz
            for dy in range(2):
                wy = fy if dy else 1.0 - fy
                yi = y0 + dy
                for dx in range(2):
                    wx = fx if dx else 1.0 - fx
                    xi = x0 + dx
                    w = wz * wy * wx
                    if w == 0.0:
                        continue
                    if 0 <= xi < nx and 0 <= yi < ny and 0 <= zi < nz:
                        acc += w * vals[zi, yi, xi]
        out[i] = acc
    return out_arr
