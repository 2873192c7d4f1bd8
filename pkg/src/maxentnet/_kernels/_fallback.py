"""Pure-numpy implementation of the per-node metric kernel.

Used when the compiled extension is unavailable (or explicitly disabled via
MAXENTNET_PURE_PYTHON=1). Matches `_core.node_metrics` bit-for-bit up to
floating-point reduction order.
"""

import numpy as np


def node_metrics(adj, wts, wtot):
    """Per-node structural metrics of a (possibly fractional) network.

    Parameters
    ----------
    adj : (n, n) float64 array
        Symmetric matrix with zero diagonal. Binary 0/1 entries for an
        observed graph, connection probabilities for an ensemble.
    wts : (n, n) float64 array
        Symmetric weight (or expected-weight) matrix with zero diagonal.
    wtot : float
        Normalizer for the weighted clustering triple products, typically
        the total weight sum(wts[i, j] for i < j). Must be positive.

    Returns
    -------
    (k, s, knn, snn, c, cw) : six (n,) float64 arrays
        Undefined entries (k == 0 for knn/snn, k <= 1 for c/cw) are NaN.
    """
    k = adj.sum(axis=1)
    s = wts.sum(axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        knn = (adj @ k) / k
        snn = (adj @ s) / k
    knn[k == 0.0] = np.nan
    snn[k == 0.0] = np.nan

    # diag(A^3) via one BLAS product: sum_j (A^2)_ij A_ij with A symmetric.
    tri = ((adj @ adj) * adj).sum(axis=1)
    m = np.cbrt(wts / wtot)
    triw = ((m @ m) * m).sum(axis=1)

    denom = k * (k - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = tri / denom
        cw = triw / denom
    undef = k <= 1.0
    c[undef] = np.nan
    cw[undef] = np.nan
    return k, s, knn, snn, c, cw
