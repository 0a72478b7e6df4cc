"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so any build failure here downgrades to a pure-Python install
instead of aborting.
"""

import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("TOVQA_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "tovqa.kernels._cykernels",
                    sources=["src/tovqa/kernels/_cykernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError as exc:
        sys.stderr.write(f"tovqa: building without compiled kernels ({exc})\n")

setup(ext_modules=ext_modules)
