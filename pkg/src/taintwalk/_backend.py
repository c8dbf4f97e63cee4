"""Kernel backend selection.

The compiled extension is used when importable. Set ``TAINTWALK_BACKEND`` to
``python`` to force the fallback, or ``cython`` to fail loudly without it.
"""

import os

from . import _fallback


def _load(name):
    if name == "python":
        return _fallback
    try:
        from . import _kernels
    except ImportError:
        if name == "cython":
            raise
        return _fallback
    return _kernels


kernels = _load(os.environ.get("TAINTWALK_BACKEND", "auto").lower())
BACKEND = kernels.BACKEND


def get_kernels(name):
    """Return the kernel module for ``name`` ("python" or "cython")."""
    return _load(name)
