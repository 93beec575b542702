"""Build script: compiles the optional Cython convolution kernel.

The package works without the extension (a pure numpy fallback is selected
at import time), so any build failure here is downgraded to a warning.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/cpapprox/_kernels/_speedups.pyx"],
        language_level="3",
    )
    include_dirs = [numpy.get_include()]
except Exception as exc:  # pragma: no cover
    print(f"cpapprox: skipping Cython extension build ({exc})", file=sys.stderr)
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
