"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: ``graphattack.kernels``
falls back to pure-numpy implementations when the compiled module is missing.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - source dist without Cython
    cythonize = None

extensions = [
    Extension(
        "graphattack.kernels._ckernels",
        ["src/graphattack/kernels/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"})
    if cythonize
    else [],
)
