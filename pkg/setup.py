"""Builds the optional compiled stepping kernel; the package works without it."""
import os

import numpy as np
from setuptools import setup

ext_modules = []
if not os.environ.get("DELAYOSC_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            ["src/delayosc/_kernels.pyx"],
            compiler_directives={"language_level": "3"},
            quiet=True,
        )
        for ext in ext_modules:
            ext.include_dirs.append(np.get_include())

setup(ext_modules=ext_modules)
