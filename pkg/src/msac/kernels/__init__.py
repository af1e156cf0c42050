"""Convolution kernel backends.

The compiled Cython extension is preferred when it imported cleanly; the
NumPy fallback is selected otherwise. Set ``MSAC_KERNELS=py`` or
``MSAC_KERNELS=c`` to force a backend (``c`` raises if the extension is
missing). Callers go through the module attributes ``conv1d`` and
``conv1d_transposed`` so the choice stays a single import-time decision.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_choice = os.environ.get("MSAC_KERNELS", "auto").strip().lower()
if _choice in ("auto", ""):
    _active = _ckernels if _ckernels is not None else _pykernels
elif _choice in ("c", "compiled"):
    if _ckernels is None:
        raise ImportError("MSAC_KERNELS=c requested but the compiled extension is not built")
    _active = _ckernels
elif _choice in ("py", "python"):
    _active = _pykernels
else:
    raise ValueError(f"unrecognized MSAC_KERNELS value {_choice!r} (use 'auto', 'c' or 'py')")

BACKEND = "compiled" if _active is _ckernels else "python"

conv1d = _active.conv1d
conv1d_transposed = _active.conv1d_transposed


def available_backends() -> dict:
    """Map of backend name to its kernel module (compiled entry may be absent)."""
    out = {"python": _pykernels}
    if _ckernels is not None:
        out["compiled"] = _ckernels
    return out
