"""Kernel backend selection.

The compiled Cython backend is preferred; the pure-numpy twin is used when
the extension was not built. ``GRAPHATTACK_KERNELS=py`` forces the fallback,
``GRAPHATTACK_KERNELS=c`` makes a missing extension a hard error.
"""

import os

from . import _pykernels

_requested = os.environ.get("GRAPHATTACK_KERNELS", "").strip().lower()

if _requested == "py":
    _impl = _pykernels
elif _requested == "c":
    from . import _ckernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

neighbor_sum = _impl.neighbor_sum
weighted_neighbor_sum = _impl.weighted_neighbor_sum
bfs_hops = _impl.bfs_hops
component_count = _impl.component_count


def backend_name():
    """'cython' when the compiled extension is active, else 'python'."""
    return "python" if _impl is _pykernels else "cython"
