import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segbench.grid import (
    BoundingBox,
    EmptyIntersectionError,
    Grid,
    Mask,
    Volume,
    crop,
    embed_mask,
    resample,
    resample_mask,
    znormalize,
)

from conftest import identity_volume, rotation_z


def random_grid(rng) -> Grid:
    dims = tuple(int(d) for d in rng.integers(2, 9, size=3))
    spacing = rng.uniform(0.2, 2.5, size=3)
    origin = rng.uniform(-40, 40, size=3)
    # random rotation via QR of a gaussian matrix, det fixed to +1
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return Grid(dims, spacing, origin, q)


class TestWorldVoxel:
    def test_identity_case(self):
        g = Grid((10, 10, 10), (1, 1, 1), (0, 0, 0))
        assert np.allclose(g.world_to_voxel([3.0, 4.0, 5.0]), [3, 4, 5])

    def test_uniform_scale(self):
        g = Grid((10, 10, 10), (0.5, 0.5, 0.5), (0, 0, 0))
        assert np.allclose(g.world_to_voxel([1.0, 1.0, 1.0]), [2, 2, 2])

    def test_rotated_round_trip(self):
        # forward map of voxel (1,0,0), then the inverse, recovers (1,0,0)
        g = Grid((5, 5, 5), (1, 1, 1), (2, -1, 3), rotation_z(90))
        p = g.voxel_to_world(np.array([1.0, 0.0, 0.0]))
        assert np.allclose(p, [2, 0, 3])  # x-axis maps to world +y
        assert np.allclose(g.world_to_voxel(p), [1, 0, 0], atol=1e-12)

    def test_round_trip_random_grids(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            g = random_grid(rng)
            pts = rng.uniform(-20, 60, size=(40, 3))
            back = g.voxel_to_world(g.world_to_voxel(pts))
            assert np.max(np.abs(back - pts)) < 1e-9

    def test_invariants_rejected(self):
        with pytest.raises(ValueError):
            Grid((0, 5, 5), (1, 1, 1), (0, 0, 0))
        with pytest.raises(ValueError):
            Grid((5, 5, 5), (1, -1, 1), (0, 0, 0))
        with pytest.raises(ValueError):
            Grid((5, 5, 5), (1, 1, 1), (0, 0, 0), -np.eye(3))


class TestResample:
    def test_identity_spacing_is_identical(self):
        rng = np.random.default_rng(0)
        v = identity_volume(rng.normal(size=(6, 5, 4)))
        out = resample(v, (1, 1, 1))
        assert out.grid == v.grid
        assert np.array_equal(out.data, v.data)

    def test_constant_field_stays_constant(self):
        v = identity_volume(np.full((6, 6, 6), 3.25))
        out = resample(v, (0.4, 0.7, 1.3))
        assert np.allclose(out.data, 3.25)

    def test_linear_ramp_exact_at_interior(self):
        # trilinear interpolation reproduces a linear field exactly; the
        # expected interior values are the analytic ramp f(x) = x
        nx = 10
        data = np.tile(np.arange(nx, dtype=np.float64), (4, 4, 1))
        v = identity_volume(data)
        out = resample(v, (0.5, 0.5, 0.5))
        xs = np.arange(out.grid.dims[0]) * 0.5
        interior = xs <= nx - 1  # beyond the last input center is extrapolation
        mid = out.data[4, 4, :]
        assert np.allclose(mid[interior], xs[interior], atol=1e-12)

    def test_world_extent_preserved_within_one_voxel(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            g = random_grid(rng)
            v = Volume(g, rng.normal(size=g.shape))
            tsp = rng.uniform(0.3, 2.0, size=3)
            out = resample(v, tsp)
            old_span = np.asarray(g.dims) * g.spacing
            new_span = np.asarray(out.grid.dims) * out.grid.spacing
            assert np.all(np.abs(old_span - new_span) <= np.maximum(g.spacing, tsp) + 1e-12)

    def test_degenerate_extent_errors(self):
        v = identity_volume(np.zeros((2, 2, 2)))
        with pytest.raises(ValueError):
            resample(v, (10, 10, 10))

    def test_nearest_mask_stays_binary(self):
        rng = np.random.default_rng(5)
        g = Grid((7, 6, 5), (1.0, 1.1, 0.9), (0, 0, 0))
        m = Mask(g, rng.random(g.shape) > 0.5)
        out = resample_mask(m, (0.45, 0.6, 1.4))
        assert out.data.dtype == np.bool_


class TestZnormalize:
    def test_simple_values(self):
        v = identity_volume(np.array([[[1.0, 2.0, 3.0]]]))
        out = znormalize(v)
        assert abs(out.data.mean()) < 1e-12
        assert abs(out.data.std() - 1.0) < 1e-12

    def test_constant_region_errors(self):
        v = identity_volume(np.full((1, 1, 3), 5.0))
        with pytest.raises(ValueError):
            znormalize(v)

    def test_zeros_excluded_two_pass_oracle(self):
        # independent two-pass mean/std over the nonzero values only
        rng = np.random.default_rng(11)
        data = rng.uniform(1.0, 9.0, size=(6, 5, 4))
        data[rng.random(data.shape) < 0.3] = 0.0
        vals = data[data != 0.0]
        mean = vals.sum() / vals.size
        std = np.sqrt(((vals - mean) ** 2).sum() / vals.size)
        expected = (vals - mean) / std

        out = znormalize(identity_volume(data))
        assert np.allclose(out.data[data != 0.0], expected, atol=1e-12)
        assert np.all(out.data[data == 0.0] == 0.0)
        got = out.data[data != 0.0]
        assert abs(got.mean()) < 1e-9 and abs(got.std() - 1.0) < 1e-9


class TestCrop:
    def test_full_extent_box_is_identity(self):
        rng = np.random.default_rng(2)
        v = identity_volume(rng.normal(size=(5, 6, 7)))
        out = crop(v, v.grid.extent())
        assert out.grid == v.grid
        assert np.array_equal(out.data, v.data)

    def test_hand_enumerated_box(self):
        # centers at 0..9 per axis; [2,5) keeps centers {2,3,4} -> 3x3x3 @ (2,2,2)
        rng = np.random.default_rng(4)
        v = identity_volume(rng.normal(size=(10, 10, 10)))
        out = crop(v, BoundingBox((2, 2, 2), (5, 5, 5)))
        assert out.grid.dims == (3, 3, 3)
        assert np.allclose(out.grid.origin, (2, 2, 2))
        assert np.array_equal(out.data, v.data[2:5, 2:5, 2:5])

    def test_box_exceeding_extent_clips(self):
        v = identity_volume(np.arange(27.0).reshape(3, 3, 3))
        out = crop(v, BoundingBox((-100, -100, -100), (100, 100, 100)))
        assert out.grid == v.grid

    def test_empty_intersection_errors(self):
        v = identity_volume(np.zeros((3, 3, 3)))
        with pytest.raises(EmptyIntersectionError):
            crop(v, BoundingBox((50, 50, 50), (60, 60, 60)))

    def test_crop_idempotent(self):
        rng = np.random.default_rng(9)
        v = identity_volume(rng.normal(size=(8, 8, 8)))
        box = BoundingBox((1.2, 0.4, 2.7), (6.1, 5.0, 6.9))
        once = crop(v, box)
        twice = crop(once, box)
        assert twice.grid == once.grid
        assert np.array_equal(twice.data, once.data)

    def test_mask_and_probability_overloads(self):
        rng = np.random.default_rng(6)
        v = identity_volume(rng.normal(size=(6, 6, 6)))
        box = BoundingBox((1, 1, 1), (4, 4, 4))
        m = Mask(v.grid, rng.random(v.grid.shape) > 0.5)
        cm = crop(m, box)
        assert cm.data.dtype == np.bool_
        assert cm.grid == crop(v, box).grid


class TestEmbedMask:
    def test_exact_paste_on_aligned_lattices(self):
        rng = np.random.default_rng(8)
        v = identity_volume(rng.normal(size=(10, 10, 10)))
        box = BoundingBox((2, 3, 4), (7, 8, 9))
        sub = crop(v, box)
        m = Mask(sub.grid, rng.random(sub.grid.shape) > 0.4)
        full = embed_mask(m, v.grid)
        assert full.voxel_count == m.voxel_count
        assert np.array_equal(full.data[4:9, 3:8, 2:7], m.data)


@settings(max_examples=60, deadline=None)
@given(
    px=st.floats(-50, 50),
    py=st.floats(-50, 50),
    pz=st.floats(-50, 50),
    sx=st.floats(0.1, 3.0),
    deg=st.floats(0, 360),
)
def test_round_trip_property(px, py, pz, sx, deg):
    g = Grid((4, 5, 6), (sx, 1.0, 2.0), (1.0, -2.0, 3.0), rotation_z(deg))
    p = np.array([px, py, pz])
    assert np.max(np.abs(g.voxel_to_world(g.world_to_voxel(p)) - p)) < 1e-9
