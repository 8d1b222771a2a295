"""Builds the optional C extension for the fuzzy-match scoring kernel.

The package works without it: ``themeforge.stance.matching`` falls back to
the pure-Python kernel when the compiled module is absent.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/themeforge/stance/_editdist.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
