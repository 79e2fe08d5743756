"""Build script: compiles the optional Cython BDD core if possible.

The package works without the extension (pure-Python fallback in
qbfcompress._core); a failed compile is not fatal.
"""
from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("qbfcompress._core.bdd_cy",
                   ["src/qbfcompress/_core/bdd_cy.pyx"])],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"warning: building without compiled core ({exc})")

setup(ext_modules=ext_modules)
