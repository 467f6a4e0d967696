"""Nuclear-norm-family completion baselines: soft and hard spectral methods.

Both operate on the dense matrix, so they are intended for desk-scale
comparisons, not production use. SVD sign conventions are pinned to make
runs reproducible bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .solver import FactorPair

METHODS = ("svt", "svp")
DIVERGENCE_FACTOR = 10.0


@dataclass
class BaselineConfig:
    """Hyperparameters for the spectral baselines.

    ``step_eta`` and ``tau_svt`` default to size-dependent values computed
    at fit time: eta = 1.2 * p * n / |omega| and tau = 5 * sqrt(p * n) for
    the soft-threshold method, eta = p * n / |omega| for the hard-rank one.
    """

    method: str
    rank_r: int = 10
    step_eta: float | None = None
    tau_svt: float | None = None
    max_iters: int = 200
    tol: float = 1e-4

    def __post_init__(self):
        if self.method not in METHODS:
            raise DataError(f"method must be one of {METHODS}")
        if self.rank_r < 1:
            raise DataError("rank_r must be a positive integer")
        if self.step_eta is not None and not self.step_eta > 0:
            raise DataError("step_eta must be positive")
        if self.tau_svt is not None and not self.tau_svt > 0:
            raise DataError("tau_svt must be positive")
        if self.max_iters < 1:
            raise DataError("max_iters must be positive")
        if not self.tol > 0:
            raise DataError("tol must be positive")


def _svd_sign_fixed(m):
    """SVD with descending singular values and a fixed sign convention.

    The first nonzero component of each left singular vector is made
    non-negative so equal inputs always factor identically.
    """
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    for k in range(u.shape[1]):
        nz = np.nonzero(u[:, k])[0]
        if nz.size and u[nz[0], k] < 0:
            u[:, k] = -u[:, k]
            vt[k, :] = -vt[k, :]
    return u, s, vt


def _shrink(m, tau):
    u, s, vt = _svd_sign_fixed(m)
    keep = np.maximum(s - tau, 0.0)
    return (u * keep) @ vt


def _truncate_rank(m, r):
    u, s, vt = _svd_sign_fixed(m)
    return (u[:, :r] * s[:r]) @ vt[:r, :], u[:, :r], s[:r], vt[:r, :]


def _check_obs(obs):
    if len(obs) == 0:
        raise DataError("baseline fit requires a non-empty observation set")


def svt_fit(obs, cfg, callback=None):
    """Soft singular-value thresholding iteration; returns the dense estimate.

    Repeats Y <- Y + eta * P_omega(Z - X), X <- shrink(Y, tau) until the
    relative residual on the observed set drops below ``cfg.tol`` or the
    iteration cap is hit. Raises NumericalError if the residual grows to
    ten times its initial value.
    """
    _check_obs(obs)
    z = obs.to_dense()
    mask = obs.mask()
    m = len(obs)
    eta = cfg.step_eta if cfg.step_eta is not None else 1.2 * obs.p * obs.n / m
    tau = cfg.tau_svt if cfg.tau_svt is not None else 5.0 * np.sqrt(obs.p * obs.n)

    z_norm = np.linalg.norm(z[mask])
    y = np.zeros_like(z)
    x = np.zeros_like(z)
    for it in range(cfg.max_iters):
        y[mask] += eta * (z[mask] - x[mask])
        x = _shrink(y, tau)
        rel = np.linalg.norm(x[mask] - z[mask]) / z_norm
        if callback is not None:
            callback(it + 1, rel)
        if rel <= cfg.tol:
            break
        if not np.isfinite(rel) or rel > DIVERGENCE_FACTOR:
            raise NumericalError(
                f"soft-threshold iteration diverged (relative residual {rel:.3g})")
    return x


def svp_fit(obs, cfg, callback=None):
    """Hard rank-r projected gradient; returns the estimate in factored form.

    Repeats X <- best-rank-r(X - eta * P_omega(X - Z)). The result is a
    FactorPair whose budget is the max row norm actually achieved, so it
    plugs into the same prediction and certificate paths as the solver.
    """
    _check_obs(obs)
    if cfg.rank_r > min(obs.p, obs.n):
        raise DataError(
            f"rank_r={cfg.rank_r} exceeds min(p, n) = {min(obs.p, obs.n)}")
    z = obs.to_dense()
    mask = obs.mask()
    m = len(obs)
    eta = cfg.step_eta if cfg.step_eta is not None else obs.p * obs.n / m

    z_norm = np.linalg.norm(z[mask])
    x = np.zeros_like(z)
    u, s, vt = None, None, None
    for it in range(cfg.max_iters):
        g = np.zeros_like(z)
        g[mask] = x[mask] - z[mask]
        x, u, s, vt = _truncate_rank(x - eta * g, cfg.rank_r)
        rel = np.linalg.norm(x[mask] - z[mask]) / z_norm
        if callback is not None:
            callback(it + 1, rel)
        if rel <= cfg.tol:
            break
        if not np.isfinite(rel) or rel > DIVERGENCE_FACTOR:
            raise NumericalError(
                f"rank-projection iteration diverged (relative residual {rel:.3g})")
    root = np.sqrt(s)
    fu = u * root
    fv = vt.T * root
    achieved = max(
        float(np.sqrt(np.einsum("ij,ij->i", fu, fu).max())) if fu.size else 0.0,
        float(np.sqrt(np.einsum("ij,ij->i", fv, fv).max())) if fv.size else 0.0)
    return FactorPair(fu, fv, achieved if achieved > 0 else 1.0)
