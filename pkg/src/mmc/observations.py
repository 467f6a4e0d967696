"""Sparse storage of the partially observed sign matrix and the masked loss."""

import numpy as np

from ._kernels import residuals_into
from .errors import DataError, DimensionError


class SignedObservations:
    """Immutable coordinate list of +-1 entries of a p x n matrix.

    Entries are stored sorted by (row, col) so the row-major order doubles
    as CSR order; a column-major permutation and both index pointers are
    precomputed once for the solver's sparse sweeps. Instances are safe to
    share across threads/processes after construction.
    """

    __slots__ = ("p", "n", "rows_idx", "cols_idx", "signs",
                 "row_ptr", "col_ptr", "csc_order")

    def __init__(self, rows, cols, entries):
        entries = np.asarray(list(entries) if not isinstance(entries, np.ndarray) else entries)
        if entries.size == 0:
            entries = entries.reshape(0, 3)
        if entries.ndim != 2 or entries.shape[1] != 3:
            raise DataError("entries must be (i, j, z) triples")
        self._setup(rows, cols,
                    entries[:, 0].astype(np.int64),
                    entries[:, 1].astype(np.int64),
                    entries[:, 2].astype(np.float64))

    @classmethod
    def from_arrays(cls, rows, cols, rows_idx, cols_idx, signs):
        """Build from parallel index/sign arrays (no triple list needed)."""
        obs = cls.__new__(cls)
        obs._setup(rows, cols,
                   np.asarray(rows_idx, dtype=np.int64).copy(),
                   np.asarray(cols_idx, dtype=np.int64).copy(),
                   np.asarray(signs, dtype=np.float64).copy())
        return obs

    def _setup(self, rows, cols, ri, ci, z):
        p, n = int(rows), int(cols)
        if p <= 0 or n <= 0:
            raise DimensionError(f"matrix size must be positive, got {p} x {n}")
        if not (ri.shape == ci.shape == z.shape) or ri.ndim != 1:
            raise DataError("index and sign arrays must be 1-d and equal length")
        if ri.size:
            if ri.min() < 0 or ri.max() >= p:
                raise DimensionError(f"row index out of range for p={p}")
            if ci.min() < 0 or ci.max() >= n:
                raise DimensionError(f"col index out of range for n={n}")
            if not np.all(np.abs(z) == 1.0):
                raise DataError("every observed value must be exactly -1 or +1")
        order = np.lexsort((ci, ri))
        ri, ci, z = ri[order], ci[order], z[order]
        if ri.size > 1:
            same = (np.diff(ri) == 0) & (np.diff(ci) == 0)
            if same.any():
                k = int(np.flatnonzero(same)[0])
                raise DataError(f"duplicate entry at ({ri[k]}, {ci[k]})")
        self.p, self.n = p, n
        self.rows_idx, self.cols_idx, self.signs = ri, ci, z
        self.row_ptr = np.concatenate(
            ([0], np.cumsum(np.bincount(ri, minlength=p)))).astype(np.int64)
        csc = np.lexsort((ri, ci))
        self.csc_order = csc
        self.col_ptr = np.concatenate(
            ([0], np.cumsum(np.bincount(ci, minlength=n)))).astype(np.int64)
        for a in (self.rows_idx, self.cols_idx, self.signs,
                  self.row_ptr, self.col_ptr, self.csc_order):
            a.setflags(write=False)

    def __len__(self):
        return self.rows_idx.shape[0]

    def __repr__(self):
        return f"SignedObservations({self.p}x{self.n}, {len(self)} entries)"

    def to_dense(self):
        """Dense p x n array with observed signs and zeros elsewhere."""
        out = np.zeros((self.p, self.n))
        out[self.rows_idx, self.cols_idx] = self.signs
        return out

    def mask(self):
        """Boolean p x n array marking the observed positions."""
        out = np.zeros((self.p, self.n), dtype=bool)
        out[self.rows_idx, self.cols_idx] = True
        return out


def _omega_indices(omega):
    if isinstance(omega, SignedObservations):
        return omega.rows_idx, omega.cols_idx
    pairs = np.asarray(list(omega) if not isinstance(omega, np.ndarray) else omega,
                       dtype=np.int64)
    if pairs.size == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise DataError("omega must be (i, j) pairs or a SignedObservations")
    return pairs[:, 0], pairs[:, 1]


def project_omega(m, omega):
    """Zero out every entry of ``m`` outside the index set ``omega``."""
    m = np.asarray(m, dtype=np.float64)
    ri, ci = _omega_indices(omega)
    if ri.size:
        if ri.min() < 0 or ri.max() >= m.shape[0] or ci.min() < 0 or ci.max() >= m.shape[1]:
            raise DimensionError("omega index out of bounds for the given matrix")
    out = np.zeros_like(m)
    out[ri, ci] = m[ri, ci]
    return out


def _check_factor_dims(obs, factors):
    U, V = factors.U, factors.V
    if U.ndim != 2 or V.ndim != 2 or U.shape[1] != V.shape[1]:
        raise DimensionError("factors must be 2-d with a common inner dimension")
    if U.shape[0] != obs.p or V.shape[0] != obs.n:
        raise DimensionError(
            f"factor shapes {U.shape} / {V.shape} do not match "
            f"observations {obs.p} x {obs.n}")


def residuals_on_omega(obs, factors):
    """Per-entry residuals u_(i) . v_(j) - z_ij, in entry storage order."""
    _check_factor_dims(obs, factors)
    out = np.empty(len(obs))
    return residuals_into(factors.U, factors.V, obs.rows_idx, obs.cols_idx,
                          obs.signs, out)


def objective(obs, factors):
    """Half the squared residual over the observed entries only."""
    r = residuals_on_omega(obs, factors)
    return 0.5 * float(np.dot(r, r))
