"""Build the optional Cython kernels.

The package works without them: ``ltlab.kernels`` falls back to the numpy
implementations in ``ltlab._kernels_py`` when the extension is missing.

Usage:
    python setup.py build_ext --inplace
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LTLAB_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "ltlab._kernels",
                    ["src/ltlab/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "language_level": "3",
            },
        )

setup(ext_modules=ext_modules)
