"""Select the compiled lattice kernels when available, else the numpy ones.

Set ``AKMETER_PURE_PYTHON=1`` to force the numpy implementation.
"""
import os

from . import _kernels_py

_FORCE_PY = os.environ.get("AKMETER_PURE_PYTHON", "").lower() in ("1", "true", "yes")

try:
    if _FORCE_PY:
        raise ImportError("forced pure-python backend")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"


def get_kernels(name: str | None = None):
    """Return the kernel module called ``name`` ('cython' or 'python'); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


wigner_lag_fold_pure = _impl.wigner_lag_fold_pure
wigner_lag_fold_density = _impl.wigner_lag_fold_density
direct_lag_sums = _impl.direct_lag_sums
