"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``GWNORM_BACKEND=python``
to force the numpy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("GWNORM_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def get(name, backend=None):
    """Kernel ``name`` from the active backend, or from ``backend`` if given."""
    if backend is None:
        return getattr(_impl, name)
    if backend == "python":
        return getattr(_kernels_py, name)
    if backend == "cython":
        from . import _ckernels
        return getattr(_ckernels, name)
    raise ValueError(f"unknown backend {backend!r}")


def mc_logweights(*args):
    return _impl.mc_logweights(*args)


def graded_recurrence(Q, R, h0, N):
    return _impl.graded_recurrence(Q, R, h0, N)
