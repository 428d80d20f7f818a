"""Energy kernels: compiled Cython core when built, numpy fallback otherwise.

Set ``VARPLAP_PURE=1`` to force the fallback.  ``BACKEND`` names the active
implementation.
"""

import os

from . import _reference
from ._reference import NumericalError

BACKEND = "python"
_impl = _reference

if os.environ.get("VARPLAP_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

energy_grad = _impl.energy_grad
energy_delta = _impl.energy_delta


def get_backend(name):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _reference
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


__all__ = ["BACKEND", "NumericalError", "energy_grad", "energy_delta", "get_backend"]
