"""Build script: compiles the optional SMO extension core.

The package works without the extension (a NumPy fallback is selected at
import time), so compilation failures degrade to a pure-Python install
instead of breaking it.
"""
import os
import sys

from setuptools import Extension, setup

# -ffp-contract=off keeps the C arithmetic bit-identical to the NumPy
# fallback (no FMA contraction inside the gradient update).
EXTRA_COMPILE_ARGS = ["-O3", "-ffp-contract=off"]


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "dqc1kernel._core",
        sources=["src/dqc1kernel/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=EXTRA_COMPILE_ARGS,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


if os.environ.get("DQC1KERNEL_NO_EXT"):
    setup(ext_modules=[])
else:
    try:
        setup(ext_modules=extensions())
    except SystemExit:
        print("warning: extension build failed; installing pure-Python fallback",
              file=sys.stderr)
        setup(ext_modules=[])
