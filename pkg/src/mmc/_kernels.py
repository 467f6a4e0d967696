"""Low-level sweeps over the observed entries.

Everything here iterates the coordinate list only; the dense p x n product
is never formed. The numba kernels parallelize over entries (or rows) with
disjoint writes, so results are bit-identical regardless of thread count.
A pure-numpy fallback keeps the package importable without numba.
"""

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


if HAVE_NUMBA:

    @numba.njit(parallel=True, cache=True)
    def _residuals(U, V, rows, cols, z, out):
        d = U.shape[1]
        for k in numba.prange(rows.shape[0]):
            i = rows[k]
            j = cols[k]
            acc = 0.0
            for t in range(d):
                acc += U[i, t] * V[j, t]
            out[k] = acc - z[k]

    def residuals_into(U, V, rows, cols, z, out):
        _residuals(U, V, rows, cols, z, out)
        return out

else:  # pragma: no cover

    def residuals_into(U, V, rows, cols, z, out):
        np.einsum("ij,ij->i", U[rows], V[cols], out=out)
        out -= z
        return out


def predict_entries_arrays(U, V, rows, cols):
    """Dot products u_(i) . v_(j) for each queried (i, j) pair."""
    out = np.empty(rows.shape[0])
    residuals_into(U, V, rows, cols, np.zeros(rows.shape[0]), out)
    return out
