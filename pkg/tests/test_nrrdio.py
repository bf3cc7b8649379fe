import numpy as np
import pytest

from segbench import nrrdio
from segbench.grid import Grid, Mask, ProbabilityMap, Volume

from conftest import rotation_z


@pytest.fixture
def grid():
    return Grid((4, 5, 6), (0.5, 0.7, 1.25), (-3.5, 2.25, 10.0), rotation_z(30))


def test_volume_round_trip(tmp_path, grid):
    rng = np.random.default_rng(0)
    vol = Volume(grid, rng.normal(size=grid.shape).astype(np.float32))
    path = tmp_path / "v.nrrd"
    nrrdio.write_volume(path, vol)
    back = nrrdio.read_volume(path)
    # grid metadata round-trips exactly (full-precision ASCII header)
    assert back.grid.dims == grid.dims
    assert np.allclose(back.grid.spacing, grid.spacing, atol=1e-15)
    assert np.array_equal(back.grid.origin, grid.origin)
    assert np.allclose(back.grid.orientation, grid.orientation, atol=1e-15)
    assert np.array_equal(back.data, vol.data)  # data was float32 already


def test_mask_round_trip_bitwise(tmp_path, grid):
    rng = np.random.default_rng(1)
    mask = Mask(grid, rng.random(grid.shape) > 0.5)
    path = tmp_path / "m.nrrd"
    nrrdio.write_mask(path, mask)
    back = nrrdio.read_mask(path)
    assert np.array_equal(back.data, mask.data)


def test_probability_round_trip_and_validation(tmp_path, grid):
    rng = np.random.default_rng(2)
    pmap = ProbabilityMap(grid, rng.random(grid.shape))
    path = tmp_path / "p.nrrd"
    nrrdio.write_probability_map(path, pmap)
    back = nrrdio.read_probability_map(path)
    assert np.allclose(back.data, pmap.data, atol=1e-7)  # float32 rounding

    bad = Volume(grid, np.full(grid.shape, 7.0))
    nrrdio.write_volume(path, bad)
    with pytest.raises(nrrdio.NrrdError):
        nrrdio.read_probability_map(path)


def test_header_fields_present(tmp_path, grid):
    vol = Volume(grid, np.zeros(grid.shape))
    path = tmp_path / "v.nrrd"
    nrrdio.write_volume(path, vol)
    header = path.read_bytes().split(b"\n\n")[0].decode()
    assert header.startswith("NRRD")
    for key in ("sizes:", "space directions:", "space origin:", "endian: little", "encoding: raw"):
        assert key in header
    assert "type: float" in header


def test_corrupt_inputs_raise(tmp_path):
    p = tmp_path / "x.nrrd"
    p.write_bytes(b"not an nrrd at all\n\n")
    with pytest.raises(nrrdio.NrrdError):
        nrrdio.read_volume(p)

    p.write_bytes(b"NRRD0004\ntype: float\n")  # no blank line, no fields
    with pytest.raises(nrrdio.NrrdError):
        nrrdio.read_volume(p)

    # truncated payload
    g = Grid((4, 4, 4), (1, 1, 1), (0, 0, 0))
    nrrdio.write_volume(p, Volume(g, np.zeros(g.shape)))
    data = p.read_bytes()
    p.write_bytes(data[:-10])
    with pytest.raises(nrrdio.NrrdError):
        nrrdio.read_volume(p)
