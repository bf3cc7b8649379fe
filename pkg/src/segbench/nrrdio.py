"""Minimal NRRD reader/writer for the volume types.

Covers the subset the toolchain exchanges: detached headers are not
supported, encoding is always raw little-endian, intensities are 32-bit
float and masks unsigned 8-bit (0/1). The ASCII header carries sizes,
space directions (axis direction times spacing), and space origin with
full float64 precision so grid metadata round-trips exactly.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .grid import Grid, Mask, ProbabilityMap, Volume

_MAGIC = "NRRD0004"

_TYPE_TO_DTYPE = {
    "float": np.dtype("<f4"),
    "uchar": np.dtype("u1"),
    "unsigned char": np.dtype("u1"),
    "uint8": np.dtype("u1"),
    "uint8_t": np.dtype("u1"),
    "double": np.dtype("<f8"),
}


class NrrdError(ValueError):
    """Malformed or unsupported NRRD content."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_vec(v) -> str:
    return "(" + ",".join(_fmt(x) for x in v) + ")"


def _parse_vec(s: str) -> np.ndarray:
    s = s.strip()
    if not (s.startswith("(") and s.endswith(")")):
        raise NrrdError(f"expected parenthesized vector, got {s!r}")
    return np.array([float(t) for t in s[1:-1].split(",")], dtype=np.float64)


def _write(path, grid: Grid, data: np.ndarray, nrrd_type: str) -> None:
    directions = grid.orientation * grid.spacing  # column i scaled by spacing_i
    header = io.StringIO()
    header.write(f"{_MAGIC}\n")
    header.write("# written by segbench\n")
    header.write(f"type: {nrrd_type}\n")
    header.write("dimension: 3\n")
    header.write("space dimension: 3\n")
    header.write(f"sizes: {grid.dims[0]} {grid.dims[1]} {grid.dims[2]}\n")
    header.write(
        "space directions: "
        + " ".join(_fmt_vec(directions[:, i]) for i in range(3))
        + "\n"
    )
    header.write("kinds: domain domain domain\n")
    header.write("endian: little\n")
    header.write("encoding: raw\n")
    header.write(f"space origin: {_fmt_vec(grid.origin)}\n")
    header.write("\n")
    with open(path, "wb") as fh:
        fh.write(header.getvalue().encode("ascii"))
        fh.write(np.ascontiguousarray(data).tobytes())


def write_volume(path, vol: Volume) -> None:
    """Write intensities as float32 raw NRRD."""
    _write(path, vol.grid, vol.data.astype("<f4"), "float")


def write_mask(path, mask: Mask) -> None:
    """Write a binary mask as uchar (0/1) raw NRRD."""
    _write(path, mask.grid, mask.data.astype("u1"), "uchar")


def write_probability_map(path, pmap: ProbabilityMap) -> None:
    """Write probabilities as float32 raw NRRD."""
    _write(path, pmap.grid, pmap.data.astype("<f4"), "float")


def _read_raw(path) -> tuple[Grid, np.ndarray]:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0 or not raw[:nl].strip().decode("ascii", "replace").startswith("NRRD"):
        raise NrrdError(f"{path}: not an NRRD file")
    end = raw.find(b"\n\n")
    if end < 0:
        raise NrrdError(f"{path}: missing blank line after header")
    fields: dict[str, str] = {}
    for line in raw[nl + 1 : end].decode("ascii", "replace").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise NrrdError(f"{path}: malformed header line {line!r}")
        key, val = line.split(":", 1)
        fields[key.strip().lower()] = val.strip()

    for key in ("type", "sizes", "space directions", "space origin"):
        if key not in fields:
            raise NrrdError(f"{path}: missing header field {key!r}")
    if fields.get("encoding", "raw") != "raw":
        raise NrrdError(f"{path}: unsupported encoding {fields['encoding']!r}")
    if int(fields.get("dimension", "3")) != 3:
        raise NrrdError(f"{path}: only 3-D images are supported")
    dtype = _TYPE_TO_DTYPE.get(fields["type"])
    if dtype is None:
        raise NrrdError(f"{path}: unsupported type {fields['type']!r}")
    endian = fields.get("endian", "little")
    if dtype.itemsize > 1 and endian != "little":
        raise NrrdError(f"{path}: unsupported endian {endian!r}")

    dims = tuple(int(t) for t in fields["sizes"].split())
    if len(dims) != 3 or any(d <= 0 for d in dims):
        raise NrrdError(f"{path}: bad sizes {fields['sizes']!r}")
    parts = _split_vectors(fields["space directions"])
    if len(parts) != 3:
        raise NrrdError(f"{path}: expected 3 space directions, got {len(parts)}")
    cols = [_parse_vec(p) for p in parts]
    directions = np.column_stack(cols)
    spacing = np.linalg.norm(directions, axis=0)
    if np.any(spacing <= 0):
        raise NrrdError(f"{path}: degenerate space directions")
    orientation = directions / spacing
    origin = _parse_vec(fields["space origin"])
    grid = Grid(dims, spacing, origin, orientation)

    payload = raw[end + 2 :]
    expected = grid.n_voxels * dtype.itemsize
    if len(payload) < expected:
        raise NrrdError(f"{path}: payload truncated ({len(payload)} < {expected} bytes)")
    data = np.frombuffer(payload[:expected], dtype=dtype).reshape(grid.shape)
    return grid, data


def _split_vectors(s: str) -> list[str]:
    """Split '(..) (..) (..)' tolerating arbitrary whitespace."""
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        if depth:
            cur.append(ch)
        if ch == ")":
            depth -= 1
            if depth == 0:
                parts.append("".join(cur))
                cur = []
    return parts


def read_volume(path) -> Volume:
    grid, data = _read_raw(path)
    return Volume(grid, data.astype(np.float64))


def read_mask(path) -> Mask:
    grid, data = _read_raw(path)
    return Mask(grid, data != 0)


def read_probability_map(path) -> ProbabilityMap:
    """Read a probability map, tolerating float32 rounding just outside [0, 1]."""
    grid, data = _read_raw(path)
    vals = data.astype(np.float64)
    if vals.size and (vals.min() < -1e-6 or vals.max() > 1.0 + 1e-6):
        raise NrrdError(f"{path}: values outside [0, 1]: [{vals.min()}, {vals.max()}]")
    return ProbabilityMap(grid, np.clip(vals, 0.0, 1.0))
