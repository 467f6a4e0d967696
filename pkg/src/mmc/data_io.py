"""Edge-list ingestion, subgraph extraction, splits, and synthetic data.

The edge-list format is plain text, one `src dst sign` triple per line,
whitespace separated, with `#` comment lines — the layout used by the
public signed-network dumps (Epinions, Slashdot).
"""

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DataError, ParseError
from .observations import SignedObservations

log = logging.getLogger(__name__)

SCHEME_KINDS = ("uniform", "degree-weighted")


class EdgeRecord(NamedTuple):
    src: int
    dst: int
    sign: int


@dataclass(frozen=True)
class DatasetSummary:
    users: int
    trust_edges: int
    distrust_edges: int

    @property
    def total_edges(self):
        return self.trust_edges + self.distrust_edges


@dataclass(frozen=True)
class SplitSpec:
    """Fraction of observed entries used for training, plus the trial seed."""

    train_fraction: float
    trial_seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError("train_fraction must lie strictly between 0 and 1")


@dataclass(frozen=True)
class SamplingScheme:
    """How synthetic observation positions are drawn.

    'uniform' picks positions uniformly without replacement.
    'degree-weighted' picks position (i, j) with probability proportional
    to w_i * w_j; when no explicit weights are given, each axis gets
    power-law weights (rank+1)**(-gamma) assigned through a random
    permutation, mimicking activity-skewed users.
    """

    kind: str = "uniform"
    row_weights: np.ndarray | None = None
    col_weights: np.ndarray | None = None
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise DataError(f"scheme kind must be one of {SCHEME_KINDS}")
        for name, w in (("row_weights", self.row_weights),
                        ("col_weights", self.col_weights)):
            if w is not None:
                w = np.asarray(w, dtype=np.float64)
                if w.ndim != 1 or not np.all(np.isfinite(w)) or not np.all(w > 0):
                    raise DataError(f"{name} must be positive and finite")
                object.__setattr__(self, name, w)
        if not self.gamma >= 0:
            raise DataError("gamma must be non-negative")


def _parse_sign(token, line_number):
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"line {line_number}: sign token {token!r} is not an integer",
                         line_number) from None
    if value not in (-1, 1):
        raise ParseError(f"line {line_number}: sign must be -1 or +1, got {value}",
                         line_number)
    return value


def load_edge_list(path):
    """Parse an edge-list file into records plus a summary.

    Repeated (src, dst) pairs keep the first occurrence and log a warning.
    """
    records = []
    seen = set()
    duplicates = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 3:
                raise ParseError(
                    f"line {line_number}: expected 'src dst sign', got {line!r}",
                    line_number)
            try:
                src, dst = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise ParseError(
                    f"line {line_number}: node ids must be integers, got {line!r}",
                    line_number) from None
            if src < 0 or dst < 0:
                raise ParseError(f"line {line_number}: node ids must be non-negative",
                                 line_number)
            sign = _parse_sign(tokens[2], line_number)
            if (src, dst) in seen:
                duplicates += 1
                continue
            seen.add((src, dst))
            records.append(EdgeRecord(src, dst, sign))
    if duplicates:
        log.warning("%s: dropped %d duplicate (src, dst) edges (first kept)",
                    path, duplicates)
    return records, summarize(records)


def summarize(records):
    nodes = set()
    trust = distrust = 0
    for rec in records:
        nodes.add(rec.src)
        nodes.add(rec.dst)
        if rec.sign > 0:
            trust += 1
        else:
            distrust += 1
    return DatasetSummary(users=len(nodes), trust_edges=trust,
                          distrust_edges=distrust)


def save_edge_list(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(f"{rec.src} {rec.dst} {rec.sign}\n")


def save_metadata(path, **fields):
    """Sidecar in key=value lines, one per field, insertion order."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in fields.items():
            fh.write(f"{key}={value}\n")


def load_metadata(path):
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"line {line_number}: expected key=value",
                                 line_number)
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def top_k_degree_subgraph(records, k):
    """Observations over the k nodes of highest total (in + out) degree.

    Ties break toward the smaller original id; kept ids are relabeled
    0..k-1 in descending-degree order. Only edges with both endpoints kept
    survive; repeated (i, j) pairs keep the first occurrence.
    """
    if k < 1:
        raise DataError("k must be at least 1")
    degree = {}
    for rec in records:
        degree[rec.src] = degree.get(rec.src, 0) + 1
        degree[rec.dst] = degree.get(rec.dst, 0) + 1
    if k > len(degree):
        raise DataError(f"k={k} exceeds the {len(degree)} nodes present")
    ranked = sorted(degree, key=lambda node: (-degree[node], node))
    relabel = {node: rank for rank, node in enumerate(ranked[:k])}

    entries = []
    taken = set()
    for rec in records:
        i = relabel.get(rec.src)
        j = relabel.get(rec.dst)
        if i is None or j is None or (i, j) in taken:
            continue
        taken.add((i, j))
        entries.append((i, j, float(rec.sign)))
    return SignedObservations(k, k, entries)


def split_train_test(obs, spec):
    """Disjoint train/test partition of the observed entries, seeded."""
    m = len(obs)
    n_train = int(math.floor(spec.train_fraction * m))
    if n_train == 0 or n_train == m:
        raise DataError(
            f"fraction {spec.train_fraction} leaves an empty split for {m} entries")
    rng = np.random.default_rng(spec.trial_seed)
    perm = rng.permutation(m)
    pick_train = np.sort(perm[:n_train])
    pick_test = np.sort(perm[n_train:])
    train = SignedObservations.from_arrays(
        obs.p, obs.n, obs.rows_idx[pick_train], obs.cols_idx[pick_train],
        obs.signs[pick_train])
    test = SignedObservations.from_arrays(
        obs.p, obs.n, obs.rows_idx[pick_test], obs.cols_idx[pick_test],
        obs.signs[pick_test])
    return train, test


def _axis_weights(size, explicit, gamma, rng):
    if explicit is not None:
        if explicit.shape[0] != size:
            raise DataError("weight vector length does not match the axis size")
        return explicit
    ranks = rng.permutation(size)
    return (ranks + 1.0) ** (-gamma)


def gen_synthetic(p, n, rank, flip_noise, scheme, m_observed, seed):
    """Random low-rank sign matrix plus sampled 1-bit observations.

    The ground truth is sign(A B^T) for Gaussian factors (re-drawn in the
    measure-zero event of an exact zero). Each observed value is the truth
    with its sign flipped independently with probability ``flip_noise``;
    positions are drawn without replacement according to ``scheme``.
    Returns (truth matrix, observations).
    """
    if rank < 1 or rank > min(p, n):
        raise DataError(f"rank must lie in [1, {min(p, n)}], got {rank}")
    if not 0.0 <= flip_noise < 1.0:
        raise DataError("flip_noise must lie in [0, 1)")
    if m_observed < 0 or m_observed > p * n:
        raise DataError(f"m_observed must lie in [0, {p * n}]")

    rng = np.random.default_rng(seed)
    for _ in range(100):
        product = rng.normal(size=(p, rank)) @ rng.normal(size=(n, rank)).T
        if np.all(product != 0.0):
            break
    else:  # pragma: no cover - measure-zero event
        raise DataError("could not draw a zero-free sign pattern")
    truth = np.sign(product)

    flips = rng.random((p, n)) < flip_noise
    observed_values = np.where(flips, -truth, truth)

    w_row = _axis_weights(p, scheme.row_weights, scheme.gamma, rng) \
        if scheme.kind == "degree-weighted" else np.ones(p)
    w_col = _axis_weights(n, scheme.col_weights, scheme.gamma, rng) \
        if scheme.kind == "degree-weighted" else np.ones(n)

    if m_observed == p * n:
        flat = np.arange(p * n)
    else:
        # Gumbel top-k == successive sampling without replacement with
        # probabilities proportional to w_i * w_j
        keys = (np.log(w_row)[:, None] + np.log(w_col)[None, :]).ravel()
        keys = keys + rng.gumbel(size=p * n)
        flat = np.sort(np.argpartition(keys, p * n - m_observed)[p * n - m_observed:]) \
            if m_observed else np.empty(0, dtype=np.int64)
    rows_idx = flat // n
    cols_idx = flat % n
    obs = SignedObservations.from_arrays(
        p, n, rows_idx, cols_idx, observed_values[rows_idx, cols_idx])
    return truth, obs
