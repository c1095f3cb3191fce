"""Build script: compiles the optional Cython kernel for the sparse solver.

The package works without the extension (a pure-numpy fallback is selected
at import time), so any build failure here downgrades to a warning instead
of aborting the install.  Set CCAKIT_NO_EXTENSION=1 to skip the build.
"""

import os
import sys

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CCAKIT_NO_EXTENSION") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("ccakit._pmd_cy", ["src/ccakit/_pmd_cy.pyx"])],
            language_level=3,
        )
    except Exception as exc:  # missing Cython / compiler: fall back to pure numpy
        print(f"ccakit: skipping Cython kernel build ({exc})", file=sys.stderr)
        ext_modules = []

setup(ext_modules=ext_modules)
