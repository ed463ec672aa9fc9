"""Build script for the compiled simplex kernel.

The package works without the extension (a pure-Python backend is selected at
import time), so a failed extension build only costs speed, not correctness.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "scnreplan.solver._simplex",
        ["src/scnreplan/solver/_simplex.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # no -ffast-math, no FP contraction: results must not depend on the
        # compiler fusing multiply-adds
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
