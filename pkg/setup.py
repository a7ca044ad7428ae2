import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "oneshot._solvers_c",
                ["src/oneshot/_solvers_c.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: the package falls back to the numpy solver kernels.
    ext_modules = []

setup(ext_modules=ext_modules)
