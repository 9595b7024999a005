"""Kernel backend selection.

The compiled extension is used when importable; ``ABBUNDLE_PURE=1`` forces
the numpy fallback.  ``BACKEND`` names the active one.
"""
import os

from . import _fallback

tree_product = _fallback.tree_product

if os.environ.get("ABBUNDLE_PURE", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

ray_crossings = _impl.ray_crossings
walk_ends = _impl.walk_ends
walk_letters = _impl.walk_letters
chunk_products = _impl.chunk_products


def available_backends():
    """Mapping name -> module for every importable backend."""
    out = {"python": _fallback}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    return out
