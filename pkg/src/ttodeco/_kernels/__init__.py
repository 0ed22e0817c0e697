"""Iteration kernels with a compiled fast path.

The Cython extension ``_core`` is used when it imports; otherwise, or when
the environment variable ``TTODECO_PURE_PYTHON`` is set to ``1``, the numpy
versions in ``_fallback`` are used. ``BACKEND`` names the active one.
"""

import importlib
import os

from . import _fallback


def _load_core():
    if os.environ.get("TTODECO_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
        return None
    try:
        return importlib.import_module(__name__ + "._core")
    except ImportError:  # extension not built
        return None


_core = _load_core()

BACKEND = "cython" if _core is not None else "python"
_impl = _core if _core is not None else _fallback

sinkhorn_balance = _impl.sinkhorn_balance
tandem_procrustes_eye = _impl.tandem_procrustes_eye

__all__ = ["BACKEND", "sinkhorn_balance", "tandem_procrustes_eye"]
