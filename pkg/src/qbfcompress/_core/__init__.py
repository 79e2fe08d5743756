"""Compiled/pure backend selection for the BDD engine.

Set QBFCOMPRESS_PURE=1 to force the pure-Python implementation.
"""

import os

if os.environ.get("QBFCOMPRESS_PURE"):
    from .bdd_py import Bdd
    BACKEND = "python"
else:
    try:
        from .bdd_cy import Bdd  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        from .bdd_py import Bdd
        BACKEND = "python"

__all__ = ["Bdd", "BACKEND"]
