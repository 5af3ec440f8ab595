"""Build script: compiles the optional fast kernels.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile degrades to a pure-Python install rather
than aborting.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "susguard._kernels._core",
                ["src/susguard/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # FP contraction (FMA) would break bit-parity with the NumPy
                # fallback, which never fuses multiply-add.
                extra_compile_args=["-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "cdivision": True,
            "wraparound": False,
            "boundscheck": False,
            "initializedcheck": False,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
