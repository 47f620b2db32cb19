"""Build hook for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-Python
fallback is selected at import time); building it just makes the hot
scalar solvers and slot-loop simulations much faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ehsched._ckernels",
                ["src/ehsched/_ckernels.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
