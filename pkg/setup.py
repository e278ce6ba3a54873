"""Build the optional Cython sampling kernel.

The package works without it; ``swapnet.kernels`` falls back to a numpy
implementation that produces bit-identical counts.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SWAPNET_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "swapnet._kernels",
                    ["src/swapnet/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
