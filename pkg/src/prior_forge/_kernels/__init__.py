"""Kernel backend selection.

The compiled Cython backend is used when available; otherwise the numpy
fallback takes over.  ``PRIOR_FORGE_KERNELS=slow`` forces the fallback,
``PRIOR_FORGE_KERNELS=fast`` makes a missing extension an error.
"""

import os

from . import _slow

_choice = os.environ.get("PRIOR_FORGE_KERNELS", "").strip().lower()

if _choice == "slow":
    _impl = _slow
elif _choice == "fast":
    from . import _fast as _impl
else:
    try:
        from . import _fast as _impl
    except ImportError:
        _impl = _slow

BACKEND = _impl.BACKEND

winding_exact = _impl.winding_exact
winding_fast = _impl.winding_fast
closest_distance = _impl.closest_distance
raycast = _impl.raycast
trilinear_weights = _impl.trilinear_weights
trilinear_query = _impl.trilinear_query
trilinear_scatter = _impl.trilinear_scatter


def backend_name() -> str:
    return BACKEND
