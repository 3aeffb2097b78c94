"""Build script: the loop-function kernel is compiled with Cython when available.

Without Cython (or a compiler) the package installs the pure-Python kernel
only; ``hadronpoles.kernels`` picks whichever is importable.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HADRONPOLES_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension(
                "hadronpoles._kernels",
                ["src/hadronpoles/_kernels.pyx"],
                # no -ffast-math: branch selection relies on signed zeros and inf/nan
                extra_compile_args=["-O3"],
            )],
            compiler_directives={"language_level": "3", "boundscheck": False,
                                 "wraparound": False, "cdivision": True},
        )

setup(ext_modules=ext_modules)
