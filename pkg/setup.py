"""Build script: compiles the optional Jacobi eigensolver extension.

The package is fully functional without the extension (a numpy fallback with
the same rotation schedule is selected at import time), so any build failure
here downgrades to a pure-Python install instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/ngma_opt/_eig_core.pyx"],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"ngma-opt: skipping compiled eigensolver ({exc}); "
          "the pure-numpy fallback will be used")

setup(ext_modules=ext_modules)
