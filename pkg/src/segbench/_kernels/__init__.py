"""Hot-kernel backend selection.

The compiled Cython extension is preferred when present; otherwise the
NumPy implementations are used. ``SEGBENCH_KERNEL_BACKEND`` forces a choice
(``compiled`` or ``numpy``), which the tests and the benchmark use to compare
both paths.
"""

from __future__ import annotations

import os

from . import numpy_backend

_choice = os.environ.get("SEGBENCH_KERNEL_BACKEND", "auto").lower()

if _choice == "numpy":
    _impl = numpy_backend
elif _choice == "compiled":
    from . import _compiled as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _compiled as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = numpy_backend

BACKEND: str = _impl.NAME

bin_mean = _impl.bin_mean
hole_fill = _impl.hole_fill
region_grow = _impl.region_grow
trilinear_sample = _impl.trilinear_sample

__all__ = ["BACKEND", "bin_mean", "hole_fill", "region_grow", "trilinear_sample", "numpy_backend"]
