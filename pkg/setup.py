import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = cythonize(
    Extension(
        "sobmult._xcore",
        ["src/sobmult/_xcore.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O2", "-ffp-contract=off"],
        optional=True,
    ),
    language_level=3,
)

setup(ext_modules=ext_modules)
