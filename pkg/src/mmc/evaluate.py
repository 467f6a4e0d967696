"""Metrics and the multi-trial benchmark protocol.

A benchmark cell is one (method, observed fraction, rank) combination;
within a trial every method is fitted on the identical train split so the
comparison is paired. Aggregation is an order-independent reduction over
trial indices, which keeps reports reproducible even when trials run in a
process pool.
"""

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import svp_fit, svt_fit
from .data_io import SplitSpec, split_train_test
from .errors import DataError, MmcError
from .solver import fit, predict_entries

CSV_COLUMNS = ("method", "fraction", "rank", "trials", "failures",
               "mae_mean", "mae_std", "rmse_mean", "rmse_std",
               "sign_acc_mean", "sign_acc_std")


def _as_arrays(predictions, truths):
    x = np.asarray(predictions, dtype=np.float64)
    m = np.asarray(truths, dtype=np.float64)
    if x.shape != m.shape or x.ndim != 1:
        raise DataError("predictions and truths must be 1-d and equal length")
    if x.size == 0:
        raise DataError("test set is empty")
    return x, m


def mae(predictions, truths):
    """Mean absolute error over the held-out entries."""
    x, m = _as_arrays(predictions, truths)
    return float(np.abs(x - m).mean())


def signed_mean_error(predictions, truths):
    """Mean of the raw (signed) errors; diagnostic companion to ``mae``."""
    x, m = _as_arrays(predictions, truths)
    return float((x - m).mean())


def rmse(predictions, truths):
    """Root mean squared error over the held-out entries."""
    x, m = _as_arrays(predictions, truths)
    return float(np.sqrt(((x - m) ** 2).mean()))


def sign_accuracy(predictions, truths):
    """Fraction of entries whose predicted sign matches; ties count as +1."""
    x, m = _as_arrays(predictions, truths)
    predicted = np.where(x >= 0.0, 1.0, -1.0)
    return float((predicted == m).mean())


@dataclass(frozen=True)
class ReportCell:
    method: str
    fraction: float
    rank: int
    trials: int
    failures: int
    mae_mean: float
    mae_std: float
    rmse_mean: float
    rmse_std: float
    sign_acc_mean: float
    sign_acc_std: float
    time_mean: float


@dataclass
class EvalReport:
    cells: list

    def sorted_cells(self):
        return sorted(self.cells,
                      key=lambda c: (c.method, c.fraction, c.rank))

    def to_csv(self):
        """Deterministic CSV; timings are deliberately excluded so repeated
        runs with equal seeds produce byte-identical files."""
        lines = [",".join(CSV_COLUMNS)]
        for c in self.sorted_cells():
            lines.append(",".join([
                c.method, repr(c.fraction), str(c.rank), str(c.trials),
                str(c.failures), repr(c.mae_mean), repr(c.mae_std),
                repr(c.rmse_mean), repr(c.rmse_std),
                repr(c.sign_acc_mean), repr(c.sign_acc_std)]))
        return "\n".join(lines) + "\n"

    def to_json(self):
        """Full report including mean fit wall-clock seconds per cell."""
        payload = {"cells": [dict(vars(c)) for c in self.sorted_cells()]}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _cell_rank(method, config):
    if method == "mmc":
        return config.rank_d
    if method == "svp":
        return config.rank_r
    return 0


def _fit_and_predict(method, config, train, rows, cols):
    """Fit one method and predict the test entries; returns (preds, seconds)."""
    t0 = time.perf_counter()
    if method == "mmc":
        factors, _ = fit(train, config)
        seconds = time.perf_counter() - t0
        return predict_entries(factors, rows, cols), seconds
    if method == "svp":
        factors = svp_fit(train, config)
        seconds = time.perf_counter() - t0
        return predict_entries(factors, rows, cols), seconds
    if method == "svt":
        dense = svt_fit(train, config)
        seconds = time.perf_counter() - t0
        return dense[rows, cols], seconds
    raise DataError(f"unknown method {method!r}")


def _run_trial(task):
    """One (fraction, trial) task: split once, run every method on it."""
    obs, fraction, seed, methods, configs = task
    train, test = split_train_test(obs, SplitSpec(fraction, seed))
    rows, cols, truths = test.rows_idx, test.cols_idx, test.signs
    results = {}
    for method in methods:
        try:
            preds, seconds = _fit_and_predict(method, configs[method],
                                              train, rows, cols)
            results[method] = (mae(preds, truths), rmse(preds, truths),
                               sign_accuracy(preds, truths), seconds, None)
        except (MmcError, np.linalg.LinAlgError) as exc:
            results[method] = (None, None, None, None, str(exc))
    return results


def _trial_seeds(seeds, trials):
    if isinstance(seeds, (int, np.integer)):
        return [int(seeds) + t for t in range(trials)]
    seeds = [int(s) for s in seeds]
    if len(seeds) < trials:
        raise DataError(f"need {trials} seeds, got {len(seeds)}")
    return seeds[:trials]


def run_benchmark(obs, methods, fractions, trials, seeds, configs, workers=1):
    """Run the full (method x fraction) grid and aggregate over trials.

    ``seeds`` is either one base seed (per-trial seeds are base + trial
    index) or an explicit per-trial list; equal seeds reproduce reports
    exactly. Failed fits are skipped and counted in the cell's ``failures``.
    """
    if trials < 1:
        raise DataError("trials must be at least 1")
    for f in fractions:
        if not 0.0 < f < 1.0:
            raise DataError("every fraction must lie strictly between 0 and 1")
    for method in methods:
        if method not in configs:
            raise DataError(f"no config supplied for method {method!r}")
    per_trial = _trial_seeds(seeds, trials)

    tasks = [(obs, fraction, per_trial[t], list(methods), dict(configs))
             for fraction in fractions for t in range(trials)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial, tasks))
    else:
        outcomes = [_run_trial(task) for task in tasks]

    cells = []
    for fi, fraction in enumerate(fractions):
        rows = outcomes[fi * trials:(fi + 1) * trials]
        for method in methods:
            per_trial_results = [r[method] for r in rows]
            ok = [r for r in per_trial_results if r[4] is None]
            failures = trials - len(ok)
            if ok:
                maes = np.array([r[0] for r in ok])
                rmses = np.array([r[1] for r in ok])
                accs = np.array([r[2] for r in ok])
                secs = np.array([r[3] for r in ok])
                cell = ReportCell(
                    method=method, fraction=float(fraction),
                    rank=_cell_rank(method, configs[method]),
                    trials=trials, failures=failures,
                    mae_mean=float(maes.mean()), mae_std=float(maes.std()),
                    rmse_mean=float(rmses.mean()), rmse_std=float(rmses.std()),
                    sign_acc_mean=float(accs.mean()),
                    sign_acc_std=float(accs.std()),
                    time_mean=float(secs.mean()))
            else:
                cell = ReportCell(
                    method=method, fraction=float(fraction),
                    rank=_cell_rank(method, configs[method]),
                    trials=trials, failures=failures,
                    mae_mean=float("nan"), mae_std=float("nan"),
                    rmse_mean=float("nan"), rmse_std=float("nan"),
                    sign_acc_mean=float("nan"), sign_acc_std=float("nan"),
                    time_mean=float("nan"))
            cells.append(cell)
    return EvalReport(cells)


def rank_sweep(obs, d_values, fraction, trials, seeds, config, workers=1):
    """Benchmark the solver across factorization ranks at a fixed fraction.

    Splits are paired across ranks (same per-trial seeds), so differences
    between rank cells are attributable to the rank alone.
    """
    if not d_values:
        raise DataError("d_values must be non-empty")
    cells = []
    for d in d_values:
        report = run_benchmark(obs, ["mmc"], [fraction], trials, seeds,
                               {"mmc": replace(config, rank_d=int(d))},
                               workers=workers)
        cells.extend(report.cells)
    return EvalReport(cells)
