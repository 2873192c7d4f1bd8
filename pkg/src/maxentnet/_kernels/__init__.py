"""Metric kernel backends.

The compiled Cython core is preferred; the numpy fallback is selected when
the extension is not built or when MAXENTNET_PURE_PYTHON=1 is set.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("MAXENTNET_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND = "python" if _impl is _fallback else "cython"


def node_metrics(adj, wts, wtot=None):
    """Dispatch to the active backend; see `_fallback.node_metrics`."""
    adj = np.ascontiguousarray(adj, dtype=np.float64)
    wts = np.ascontiguousarray(wts, dtype=np.float64)
    if adj.shape != wts.shape or adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError("adj and wts must be square matrices of equal shape")
    if wtot is None:
        wtot = wts.sum() / 2.0
    if wtot <= 0.0:
        raise ValueError("empty weighted graph: total weight must be positive")
    return _impl.node_metrics(adj, wts, float(wtot))
