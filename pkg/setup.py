"""Builds the optional compiled kernel extension.

The package works without it (a NumPy fallback is selected at import time),
so the extension is marked optional: a missing compiler or Cython degrades
to the pure build instead of failing the install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "segbench._kernels._compiled",
                ["src/segbench/_kernels/_compiled.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.optional = True
except ImportError:
    pass

setup(ext_modules=ext_modules)
