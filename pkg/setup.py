import os
import sys

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the numpy kernels take over
    cythonize = None


def _extensions():
    if cythonize is None or os.environ.get("RELBOLTZ_NO_EXT"):
        return []
    openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
    # RELBOLTZ_PORTABLE=1 drops -march=native for redistributable builds
    native = [] if os.environ.get("RELBOLTZ_PORTABLE") else ["-march=native"]
    ext = Extension(
        "relboltz._ckernels",
        ["src/relboltz/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-fno-math-errno"] + native + openmp,
        extra_link_args=openmp,
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
