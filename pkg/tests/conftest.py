import sys
import threading

import numpy as np
import pytest

from segbench.grid import Grid, Mask, Volume


def identity_volume(data) -> Volume:
    """Unit-spacing volume at the origin from a (nz, ny, nx) array."""
    arr = np.asarray(data, dtype=np.float64)
    return Volume(Grid((arr.shape[2], arr.shape[1], arr.shape[0]), (1, 1, 1), (0, 0, 0)), arr)


def mask_like(vol_or_grid, data) -> Mask:
    grid = vol_or_grid.grid if hasattr(vol_or_grid, "grid") else vol_or_grid
    return Mask(grid, np.asarray(data, dtype=bool))


def rotation_z(deg: float) -> np.ndarray:
    a = np.deg2rad(deg)
    return np.array([[np.cos(a), -np.sin(a), 0.0], [np.sin(a), np.cos(a), 0.0], [0.0, 0.0, 1.0]])


class _OpenAudit:
    """Records file paths opened while enabled, via sys.addaudithook.

    Audit hooks cannot be removed, so a single process-wide hook is toggled
    around the code under audit.
    """

    def __init__(self):
        self.enabled = False
        self.paths: list[str] = []
        self._lock = threading.Lock()
        self._installed = False

    def _hook(self, event, args):
        if self.enabled and event == "open":
            with self._lock:
                self.paths.append(str(args[0]))

    def install(self):
        if not self._installed:
            sys.addaudithook(self._hook)
            self._installed = True

    def __enter__(self):
        self.install()
        self.paths.clear()
        self.enabled = True
        return self

    def __exit__(self, *exc):
        self.enabled = False
        return False


_AUDIT = _OpenAudit()


@pytest.fixture
def open_audit():
    """Context manager recording every file open inside the with-block."""
    return _AUDIT
