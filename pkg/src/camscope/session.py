"""Drill-down state over one class's activation-map matrix.

A session stacks inclusive per-feature range filters; the active subset is
always the set of rows satisfying every filter, so filter order never
matters and each added filter can only shrink the subset. Re-aggregating the
active rows yields a sub-global map with the same shape as the global one,
down to a single sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregate import AggregatedCam, CamMatrix, build_aggregated_cam
from .errors import ContractViolationError, EmptyInputError, EmptySelectionError

ANNOTATION_STATES = ("interesting", "irrelevant")
DEFAULT_HISTOGRAM_BINS = 32


@dataclass(frozen=True)
class FilterStep:
    """Inclusive value range on one feature of the normalized maps."""

    feature_index: int
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ContractViolationError(f"filter range inverted: lo={self.lo} > hi={self.hi}")
        if self.lo < -1.0 or self.hi > 1.0:
            raise ContractViolationError("filter bounds must lie in [-1, 1]")

    def to_dict(self):
        return {"feature_index": self.feature_index, "lo": self.lo, "hi": self.hi}


@dataclass
class HistogramView:
    feature_index: int
    bin_edges: np.ndarray  # B + 1, strictly increasing
    counts: np.ndarray  # B, non-negative, sums to the active subset size

    def to_dict(self):
        return {
            "feature_index": self.feature_index,
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
        }


@dataclass
class Session:
    """Filter stack plus annotations over an immutable base matrix."""

    matrix: CamMatrix
    filters: list = field(default_factory=list)
    annotations: dict = field(default_factory=dict)  # feature_index -> status

    def __post_init__(self):
        self._active = np.arange(self.matrix.n_samples)

    @property
    def class_index(self):
        return self.matrix.class_index

    @property
    def active_rows(self) -> np.ndarray:
        return self._active

    @property
    def active_ids(self):
        return [self.matrix.sample_ids[i] for i in self._active]

    def to_dict(self):
        return {
            "class_index": self.class_index,
            "filters": [f.to_dict() for f in self.filters],
            "active_ids": self.active_ids,
            "annotations": {str(k): v for k, v in sorted(self.annotations.items())},
        }

    def _rows_matching(self, steps):
        mask = np.ones(self.matrix.n_samples, dtype=bool)
        for step in steps:
            col = self.matrix.values[:, step.feature_index]
            mask &= (col >= step.lo) & (col <= step.hi)
        return np.flatnonzero(mask)

    def _check_feature(self, feature_index):
        if not 0 <= feature_index < self.matrix.n_features:
            raise IndexError(
                f"feature {feature_index} out of range for {self.matrix.n_features} features"
            )


def histogram(session: Session, feature_index, bins=DEFAULT_HISTOGRAM_BINS) -> HistogramView:
    """Histogram of one feature's values over the active subset.

    Equal-width bins over [min, max] with the final bin right-inclusive; a
    constant feature collapses to a single bin around the value.
    """
    session._check_feature(feature_index)
    if bins < 1:
        raise ContractViolationError(f"bins must be >= 1, got {bins}")
    rows = session.active_rows
    if rows.size == 0:
        raise EmptyInputError("active subset is empty")
    values = session.matrix.values[rows, feature_index]
    if values.min() == values.max():
        bins = 1
    counts, edges = np.histogram(values, bins=bins)
    return HistogramView(feature_index=int(feature_index), bin_edges=edges, counts=counts)


def apply_filter(session: Session, feature_index, lo, hi) -> Session:
    """Push one range filter and recompute the active subset.

    A filter whose conjunction with the existing stack matches no rows is
    rejected with an empty-selection error and the session stays unchanged.
    """
    session._check_feature(feature_index)
    step = FilterStep(feature_index=int(feature_index), lo=float(lo), hi=float(hi))
    rows = session._rows_matching(session.filters + [step])
    if rows.size == 0:
        raise EmptySelectionError(
            f"no sample has feature {feature_index} in [{lo}, {hi}] under the current filters"
        )
    session.filters.append(step)
    session._active = rows
    return session


def pop_filter(session: Session) -> Session:
    """Remove the most recent filter; a no-op on an empty stack."""
    if session.filters:
        session.filters.pop()
        session._active = session._rows_matching(session.filters)
    return session


def reset(session: Session) -> Session:
    """Clear every filter, restoring the full base matrix."""
    session.filters.clear()
    session._active = np.arange(session.matrix.n_samples)
    return session


def subglobal_cam(session: Session, agg_method, var_method) -> AggregatedCam:
    """Aggregate only the active rows; with no filters this is the global map."""
    rows = session.active_rows
    if rows.size == 0:
        raise EmptyInputError("active subset is empty")
    subset = CamMatrix(
        class_index=session.class_index,
        sample_ids=[session.matrix.sample_ids[i] for i in rows],
        values=session.matrix.values[rows],
    )
    return build_aggregated_cam(subset, agg_method, var_method)


def annotate(session: Session, feature_index, status) -> Session:
    """Set or clear (status None) a cell annotation; annotations are
    independent of the filter stack."""
    session._check_feature(feature_index)
    if status is None:
        session.annotations.pop(int(feature_index), None)
        return session
    if status not in ANNOTATION_STATES:
        raise ContractViolationError(
            f"annotation status must be one of {ANNOTATION_STATES} or None, got {status!r}"
        )
    session.annotations[int(feature_index)] = status
    return session
