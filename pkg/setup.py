import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "sbe._modesum_cy",
                ["src/sbe/_modesum_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
