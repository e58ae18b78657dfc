import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

PYX = os.path.join("src", "maxcore", "engine", "_search.pyx")

ext_modules = []
if cythonize is not None and os.path.exists(PYX):
    extensions = [
        Extension(
            "maxcore.engine._search",
            [PYX],
            language="c++",
            extra_compile_args=["-O2", "-std=c++17"],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )

setup(ext_modules=ext_modules)
