"""Projected gradient solver for max-norm constrained sign-matrix completion.

The completion X = U V^T is optimized over the two factors under a row-norm
budget: every row of U and V must have l2 norm at most ``lam``, which caps
max_ij |X_ij| at lam**2. Each iteration takes a gradient step on the masked
half-squared loss, backtracks the step size until sufficient decrease holds,
and re-projects the rows onto the budget.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse

from .errors import DataError, DimensionError, NumericalError
from .observations import SignedObservations, _check_factor_dims, objective, \
    residuals_on_omega

PROJECTION_MODES = ("per-row", "whole-matrix")

# relative objective decrease below this over a 10-iteration window stops the run
PLATEAU_TOL = 1e-9
PLATEAU_WINDOW = 10


@dataclass(frozen=True)
class FactorPair:
    """Factors U (p x d), V (n x d) and the row-norm budget ``lam``.

    Represents the completion X = U V^T without materializing it.
    """

    U: np.ndarray
    V: np.ndarray
    lam: float

    def __post_init__(self):
        U = np.asarray(self.U, dtype=np.float64)
        V = np.asarray(self.V, dtype=np.float64)
        if U.ndim != 2 or V.ndim != 2:
            raise DimensionError("U and V must be 2-d arrays")
        if U.shape[1] != V.shape[1]:
            raise DimensionError(
                f"inner dimensions differ: U is {U.shape}, V is {V.shape}")
        if not self.lam > 0:
            raise DataError("lam must be positive")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def p(self):
        return self.U.shape[0]

    @property
    def n(self):
        return self.V.shape[0]

    @property
    def d(self):
        return self.U.shape[1]


@dataclass
class MmcConfig:
    """Solver hyperparameters.

    Args:
        rank_d: factorization rank d.
        max_iters: iteration cap (0 returns the projected initialization).
        lam: row-norm budget; values below 1 trigger a warning since the
            observed magnitudes are exactly 1.
        armijo_beta: backtracking shrink factor in (0, 1).
        armijo_sigma: sufficient-decrease fraction in (0, 1).
        initial_step: first trial step of every backtracking run.
        min_step: below this the line search reports stationarity.
        projection_mode: 'per-row' rescales each infeasible row (the exact
            Euclidean projection); 'whole-matrix' rescales the entire factor
            by lam / max row norm.
        init_scale: initialization std is init_scale * lam / sqrt(d), so
            rows start around init_scale * lam, inside the budget.
        rng_seed: seed for the Gaussian initialization.
    """

    rank_d: int
    max_iters: int = 500
    lam: float = 1.2
    armijo_beta: float = 0.5
    armijo_sigma: float = 1e-4
    initial_step: float = 1.0
    min_step: float = 1e-10
    projection_mode: str = "per-row"
    init_scale: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.rank_d < 1:
            raise DataError("rank_d must be a positive integer")
        if self.max_iters < 0:
            raise DataError("max_iters must be non-negative")
        if not self.lam > 0:
            raise DataError("lam must be positive")
        if not 0 < self.armijo_beta < 1:
            raise DataError("armijo_beta must lie in (0, 1)")
        if not 0 < self.armijo_sigma < 1:
            raise DataError("armijo_sigma must lie in (0, 1)")
        if not self.initial_step > 0 or not self.min_step > 0:
            raise DataError("step sizes must be positive")
        if self.projection_mode not in PROJECTION_MODES:
            raise DataError(f"projection_mode must be one of {PROJECTION_MODES}")
        if not self.init_scale > 0:
            raise DataError("init_scale must be positive")
        if self.lam < 1.0:
            warnings.warn(
                f"lam={self.lam} is below 1; the observed entries have "
                "magnitude 1, so the completion cannot reach them",
                stacklevel=2)


@dataclass
class FitTrace:
    """Per-iteration record of the solver run."""

    initial_objective: float = math.nan
    objectives: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    u_row_norms: list = field(default_factory=list)
    v_row_norms: list = field(default_factory=list)
    reason: str = ""

    def __len__(self):
        return len(self.objectives)


class ArmijoResult(NamedTuple):
    alpha: float
    factors: FactorPair
    objective: float


def max_row_norm(m):
    """Largest l2 row norm (0 for an empty matrix)."""
    if m.shape[0] == 0:
        return 0.0
    return float(np.sqrt(np.einsum("ij,ij->i", m, m).max()))


def project_rows(m, lam, mode="per-row"):
    """Bring every row of ``m`` inside the l2 ball of radius ``lam``.

    'per-row' rescales only the offending rows to norm exactly lam
    (the Euclidean projection); 'whole-matrix' rescales all of ``m`` by
    lam / (max row norm) when any row exceeds the budget. Feasible input
    is returned unchanged.
    """
    if not lam > 0:
        raise DataError("lam must be positive")
    if mode not in PROJECTION_MODES:
        raise DataError(f"unknown projection mode {mode!r}")
    m = np.asarray(m, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", m, m))
    over = norms > lam
    if not over.any():
        return m
    if mode == "per-row":
        scale = np.ones(m.shape[0])
        scale[over] = lam / norms[over]
        return m * scale[:, None]
    return m * (lam / norms.max())


def _resid_csr(obs, resid):
    # entries are sorted row-major, so resid is already in CSR data order
    return sparse.csr_matrix((resid, obs.cols_idx, obs.row_ptr),
                             shape=(obs.p, obs.n))


def _resid_csr_t(obs, resid):
    order = obs.csc_order
    return sparse.csr_matrix((resid[order], obs.rows_idx[order], obs.col_ptr),
                             shape=(obs.n, obs.p))


def grad_u(obs, factors):
    """Gradient of the masked loss w.r.t. U: rows accumulate r_ij * v_(j)."""
    r = residuals_on_omega(obs, factors)
    return _resid_csr(obs, r) @ factors.V


def grad_v(obs, factors):
    """Gradient w.r.t. V: rows accumulate r_ij * u_(i)."""
    r = residuals_on_omega(obs, factors)
    return _resid_csr_t(obs, r) @ factors.U


def armijo_step(obs, factors, g_u, g_v, config, objective_value=None):
    """Backtracking line search along the projected gradient direction.

    Trial points are projections of (U - alpha g_u, V - alpha g_v); the
    first alpha = initial_step * beta**k whose trial objective drops by at
    least sigma times the projected-direction inner product is accepted.
    An alpha of 0.0 in the result signals stationarity (step underflow).
    """
    _check_factor_dims(obs, factors)
    obj0 = objective(obs, factors) if objective_value is None else objective_value
    lam, mode = factors.lam, config.projection_mode
    alpha = config.initial_step
    while alpha >= config.min_step:
        u1 = project_rows(factors.U - alpha * g_u, lam, mode)
        v1 = project_rows(factors.V - alpha * g_v, lam, mode)
        trial = FactorPair(u1, v1, lam)
        obj1 = objective(obs, trial)
        decrease = float(np.vdot(g_u, u1 - factors.U) + np.vdot(g_v, v1 - factors.V))
        # min(-, 0) keeps the accepted objective non-increasing even under
        # whole-matrix scaling, where the direction need not be descent
        if obj1 <= obj0 + config.armijo_sigma * min(decrease, 0.0):
            return ArmijoResult(alpha, trial, obj1)
        alpha *= config.armijo_beta
    return ArmijoResult(0.0, factors, obj0)


def fit(obs, config):
    """Run the projected gradient loop and return (factors, trace).

    Initialization draws U, V i.i.d. Gaussian with std
    init_scale * lam / sqrt(d) (seeded), projects them, then iterates
    gradient step / line search / projection until ``max_iters``, step
    underflow, or an objective plateau.
    """
    if not isinstance(obs, SignedObservations):
        raise DataError("obs must be a SignedObservations")
    if len(obs) == 0:
        raise DataError("cannot fit on an empty observation set")

    rng = np.random.default_rng(config.rng_seed)
    std = config.init_scale * config.lam / math.sqrt(config.rank_d)
    U = project_rows(rng.normal(0.0, std, (obs.p, config.rank_d)),
                     config.lam, config.projection_mode)
    V = project_rows(rng.normal(0.0, std, (obs.n, config.rank_d)),
                     config.lam, config.projection_mode)
    factors = FactorPair(U, V, config.lam)

    obj = objective(obs, factors)
    trace = FitTrace(initial_objective=obj, reason="max_iters")
    if not math.isfinite(obj):
        trace.reason = "numerical_error"
        raise NumericalError("objective is not finite at initialization", trace)

    for _ in range(config.max_iters):
        r = residuals_on_omega(obs, factors)
        g_u = _resid_csr(obs, r) @ factors.V
        g_v = _resid_csr_t(obs, r) @ factors.U
        step = armijo_step(obs, factors, g_u, g_v, config, objective_value=obj)
        if step.alpha == 0.0:
            trace.reason = "stationary"
            break
        factors, obj = step.factors, step.objective
        if not math.isfinite(obj):
            trace.reason = "numerical_error"
            raise NumericalError("objective became non-finite", trace)
        trace.objectives.append(obj)
        trace.steps.append(step.alpha)
        trace.u_row_norms.append(max_row_norm(factors.U))
        trace.v_row_norms.append(max_row_norm(factors.V))
        if len(trace) > PLATEAU_WINDOW:
            ref = trace.objectives[-PLATEAU_WINDOW - 1]
            if ref - obj < PLATEAU_TOL * max(abs(ref), 1.0):
                trace.reason = "plateau"
                break
    return factors, trace


def predict(factors, i, j):
    """Completion value u_(i) . v_(j) for one position."""
    if not (0 <= i < factors.p and 0 <= j < factors.n):
        raise IndexError(f"position ({i}, {j}) outside {factors.p} x {factors.n}")
    return float(np.dot(factors.U[i], factors.V[j]))


def predict_sign(factors, i, j):
    """Sign of the completion value; ties at 0 resolve to +1."""
    return 1.0 if predict(factors, i, j) >= 0.0 else -1.0


def predict_entries(factors, rows, cols):
    """Vectorized ``predict`` over parallel index arrays."""
    from ._kernels import predict_entries_arrays

    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if rows.size and (rows.min() < 0 or rows.max() >= factors.p
                      or cols.min() < 0 or cols.max() >= factors.n):
        raise IndexError("query position outside the factor dimensions")
    return predict_entries_arrays(factors.U, factors.V, rows, cols)
