"""Select the compiled kernels when available, else the numpy fallback.

Set ``ONTODIST_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

MAX_COMPILED_DIM = 8

if os.environ.get("ONTODIST_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def kernels(dim: int = 2):
    """Kernel module to use for matrices of dimension ``dim``."""
    if _compiled is not None and dim <= MAX_COMPILED_DIM:
        return _compiled
    return _fallback
