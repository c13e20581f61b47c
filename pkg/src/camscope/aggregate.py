"""Stack per-class activation maps and reduce each position to two indicators.

The stack is an (n_samples x n_features) matrix of normalized maps, one row
per sample predicted as the class. Each column is reduced to an impact value
(mean, median, or the mode of a Gaussian kernel density estimate) and a
variability value in [0, 1] (variance, standard deviation, binned entropy, or
the Gini coefficient, each computed on the column min-max rescaled to [0, 1]).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cam import cams_for_predictions
from .errors import (
    ContractViolationError,
    EmptyClassError,
    EmptyInputError,
    UnknownMethodError,
)
from .model import CamNet

AGGREGATION_METHODS = ("mean", "median", "kde_mode")
VARIABILITY_METHODS = ("variance", "stddev", "entropy", "gini")

KDE_GRID_POINTS = 512
ENTROPY_BINS = 16


@dataclass
class CamMatrix:
    """Normalized activation maps of every sample predicted as one class."""

    class_index: int
    sample_ids: list
    values: np.ndarray  # (n_samples, n_features), entries in [-1, 1]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise ContractViolationError("matrix must be (n >= 1, n_features)")
        if len(self.sample_ids) != self.values.shape[0]:
            raise ContractViolationError("one sample id per row required")
        if np.any(np.abs(self.values) > 1.0):
            raise ContractViolationError("normalized map values must lie in [-1, 1]")

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]


@dataclass
class AggregatedCam:
    """The two-indicator global explanation for one class."""

    class_index: int
    n_samples: int
    agg_method: str
    var_method: str
    impact: np.ndarray  # per feature, in [-1, 1]
    variability: np.ndarray  # per feature, in [0, 1]

    def to_dict(self):
        return {
            "class_index": self.class_index,
            "n_samples": self.n_samples,
            "agg_method": self.agg_method,
            "var_method": self.var_method,
            "impact": self.impact.tolist(),
            "variability": self.variability.tolist(),
        }


def collect_cams(net: CamNet, samples, class_index, sample_ids=None) -> CamMatrix:
    """Gather the maps of exactly those samples predicted as ``class_index``.

    Rows keep the input order of the matching samples; samples predicted as
    any other class are excluded.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise EmptyInputError("samples must be a non-empty (n, L) array")
    cams = cams_for_predictions(net, samples, sample_ids)
    rows = [c for c in cams if c.class_index == class_index]
    if not rows:
        raise EmptyClassError(f"no sample was predicted as class {class_index}")
    return CamMatrix(
        class_index=int(class_index),
        sample_ids=[c.sample_id for c in rows],
        values=np.stack([c.normalized for c in rows]),
    )


def kde_mode(values, grid_points=KDE_GRID_POINTS):
    """Most frequent value of a Gaussian kernel density estimate.

    Bandwidth is Silverman's rule of thumb, h = 0.9 * min(sigma, IQR/1.34)
    * n^(-1/5); the density is evaluated on a uniform grid spanning
    [min, max] and the grid argmax is returned. Degenerate inputs (constant,
    or bandwidth 0 because sigma or the IQR vanishes) return the most
    frequent exact value instead.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptyInputError("kde_mode needs at least one value")
    lo, hi = float(values.min()), float(values.max())
    bandwidth = silverman_bandwidth(values)
    if lo == hi or bandwidth == 0.0:
        uniq, counts = np.unique(values, return_counts=True)
        return float(uniq[np.argmax(counts)])
    grid = np.linspace(lo, hi, grid_points)
    density = gaussian_kde_density(values, grid, bandwidth)
    return float(grid[np.argmax(density)])


def silverman_bandwidth(values):
    values = np.asarray(values, dtype=np.float64)
    sigma = float(np.std(values))
    q75, q25 = np.percentile(values, [75, 25])
    return 0.9 * min(sigma, (q75 - q25) / 1.34) * values.size ** (-0.2)


def gaussian_kde_density(values, grid, bandwidth):
    """Gaussian KDE evaluated at ``grid`` points (unnormalized constants kept)."""
    z = (grid[:, None] - values[None, :]) / bandwidth
    kernel = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    return kernel.sum(axis=1) / (values.size * bandwidth)


def aggregate_impact(matrix: CamMatrix, method) -> np.ndarray:
    """Reduce every feature column to a single impact value.

    ``median`` takes the lower middle element for even n so the result is
    always an observed value; ``kde_mode`` is the KDE grid argmax per column.
    """
    if method not in AGGREGATION_METHODS:
        raise UnknownMethodError(f"unknown aggregation method {method!r}")
    values = matrix.values
    if method == "mean":
        # row-sequential accumulation keeps column means bit-reproducible
        # against a naive per-column reference (numpy's reduce switches to
        # pairwise summation for narrow matrices)
        acc = np.zeros(matrix.n_features)
        for row in values:
            acc += row
        return acc / matrix.n_samples
    if method == "median":
        ordered = np.sort(values, axis=0)
        return ordered[(matrix.n_samples - 1) // 2].copy()
    return np.array([kde_mode(values[:, j]) for j in range(matrix.n_features)])


def variability(matrix: CamMatrix, method) -> np.ndarray:
    """Per-feature dispersion in [0, 1].

    Each column is min-max rescaled to [0, 1] first; a constant column is 0
    for every method. Variance and standard deviation are population
    statistics renormalized by their maxima on [0, 1] (0.25 and 0.5).
    Entropy uses a 16-bin histogram over [0, 1] divided by ln(16). Gini is
    the mean absolute difference over twice the mean.
    """
    if method not in VARIABILITY_METHODS:
        raise UnknownMethodError(f"unknown variability method {method!r}")
    values = matrix.values
    n = matrix.n_samples
    col_min = values.min(axis=0)
    col_max = values.max(axis=0)
    spread = col_max - col_min
    constant = spread == 0.0
    safe_spread = np.where(constant, 1.0, spread)
    scaled = (values - col_min) / safe_spread

    if method == "variance":
        out = scaled.var(axis=0) / 0.25
    elif method == "stddev":
        out = scaled.std(axis=0) / 0.5
    elif method == "entropy":
        out = np.array([_binned_entropy(scaled[:, j]) for j in range(scaled.shape[1])])
    else:  # gini
        out = _gini_columns(scaled)
    out = np.where(constant, 0.0, out)
    return np.clip(out, 0.0, 1.0)


def _binned_entropy(column):
    counts, _ = np.histogram(column, bins=ENTROPY_BINS, range=(0.0, 1.0))
    p = counts[counts > 0] / column.size
    return float(-(p * np.log(p)).sum() / np.log(ENTROPY_BINS))


def _gini_columns(scaled):
    """Gini = sum_ij |x_i - x_j| / (2 n^2 mean), per column; 0 when mean is 0.

    Uses the sorted-rank identity sum_ij |x_i - x_j| = 2 * sum_i (2i - n - 1) x_(i)
    (1-based ranks over ascending order) to stay O(n log n) per column.
    """
    n = scaled.shape[0]
    ordered = np.sort(scaled, axis=0)
    ranks = 2.0 * np.arange(1, n + 1) - n - 1
    pair_sums = 2.0 * (ranks @ ordered)
    means = scaled.mean(axis=0)
    out = np.zeros(scaled.shape[1])
    nonzero = means > 0
    out[nonzero] = pair_sums[nonzero] / (2.0 * n * n * means[nonzero])
    return out


def build_aggregated_cam(matrix: CamMatrix, agg_method, var_method) -> AggregatedCam:
    """Pair an impact reduction with a variability reduction over one matrix."""
    return AggregatedCam(
        class_index=matrix.class_index,
        n_samples=matrix.n_samples,
        agg_method=agg_method,
        var_method=var_method,
        impact=aggregate_impact(matrix, agg_method),
        variability=variability(matrix, var_method),
    )
