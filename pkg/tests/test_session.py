import numpy as np
import pytest

from camscope.aggregate import CamMatrix, build_aggregated_cam
from camscope.errors import ContractViolationError, EmptySelectionError
from camscope.session import (
    Session,
    annotate,
    apply_filter,
    histogram,
    pop_filter,
    reset,
    subglobal_cam,
)


def make_matrix(values, class_index=0):
    values = np.asarray(values, dtype=np.float64)
    return CamMatrix(
        class_index=class_index,
        sample_ids=[f"s:{i}" for i in range(values.shape[0])],
        values=values,
    )


@pytest.fixture
def bimodal_session():
    # feature 0 splits the rows into a low group and a high group
    rng = np.random.default_rng(0)
    low = rng.uniform(-0.9, -0.5, size=(10, 4))
    high = rng.uniform(0.5, 0.9, size=(10, 4))
    return Session(make_matrix(np.concatenate([low, high])))


class TestHistogram:
    def test_constant_feature_single_bin(self):
        session = Session(make_matrix(np.full((7, 3), 0.5)))
        view = histogram(session, 1, bins=10)
        assert view.counts.tolist() == [7]
        assert len(view.bin_edges) == 2
        assert view.bin_edges[0] < 0.5 < view.bin_edges[1]

    def test_two_values_two_bins(self):
        session = Session(make_matrix(np.array([[0.0], [1.0]])))
        view = histogram(session, 0, bins=2)
        assert view.counts.tolist() == [1, 1]
        assert view.bin_edges.tolist() == [0.0, 0.5, 1.0]

    def test_counts_conserve_subset_size(self):
        rng = np.random.default_rng(5)
        session = Session(make_matrix(rng.uniform(-1, 1, size=(50, 6))))
        for bins in (1, 3, 32):
            view = histogram(session, 2, bins=bins)
            assert view.counts.sum() == 50
        apply_filter(session, 2, -1.0, 0.0)
        view = histogram(session, 2, bins=8)
        assert view.counts.sum() == len(session.active_ids)

    def test_right_inclusive_final_bin(self):
        session = Session(make_matrix(np.array([[0.0], [0.5], [1.0]])))
        view = histogram(session, 0, bins=2)
        # bins are [lo, hi) except the last, which includes its right edge,
        # so 1.0 lands in the final bin instead of falling off the axis
        assert view.counts.tolist() == [1, 2]

    def test_bad_feature_or_bins(self):
        session = Session(make_matrix(np.zeros((2, 3))))
        with pytest.raises(IndexError):
            histogram(session, 3)
        with pytest.raises(ContractViolationError):
            histogram(session, 0, bins=0)


class TestFilters:
    def test_full_range_keeps_everything(self, bimodal_session):
        before = bimodal_session.active_ids
        apply_filter(bimodal_session, 0, -1.0, 1.0)
        assert bimodal_session.active_ids == before
        assert len(bimodal_session.filters) == 1

    def test_single_sample_selection(self):
        values = np.array([[0.1], [0.5], [0.9]])
        session = Session(make_matrix(values))
        apply_filter(session, 0, 0.5, 0.5)
        assert session.active_ids == ["s:1"]

    def test_stacked_filters_commute(self, bimodal_session):
        a = Session(bimodal_session.matrix)
        apply_filter(a, 0, -1.0, 0.0)
        apply_filter(a, 1, -1.0, -0.6)
        b = Session(bimodal_session.matrix)
        apply_filter(b, 1, -1.0, -0.6)
        apply_filter(b, 0, -1.0, 0.0)
        assert a.active_ids == b.active_ids

    def test_empty_selection_rejected_and_unchanged(self, bimodal_session):
        apply_filter(bimodal_session, 0, -1.0, 0.0)
        before_ids = bimodal_session.active_ids
        before_filters = list(bimodal_session.filters)
        with pytest.raises(EmptySelectionError):
            apply_filter(bimodal_session, 0, 0.5, 1.0)  # contradicts the stack
        assert bimodal_session.active_ids == before_ids
        assert bimodal_session.filters == before_filters

    def test_inverted_range_rejected(self, bimodal_session):
        with pytest.raises(ContractViolationError):
            apply_filter(bimodal_session, 0, 0.5, -0.5)
        with pytest.raises(ContractViolationError):
            apply_filter(bimodal_session, 0, -2.0, 1.0)

    def test_pop_restores_previous_subset(self, bimodal_session):
        original = bimodal_session.active_ids
        apply_filter(bimodal_session, 0, -1.0, 0.0)
        filtered = bimodal_session.active_ids
        apply_filter(bimodal_session, 1, -1.0, 0.0)
        pop_filter(bimodal_session)
        assert bimodal_session.active_ids == filtered
        pop_filter(bimodal_session)
        assert bimodal_session.active_ids == original

    def test_pop_on_empty_stack_is_noop(self, bimodal_session):
        before = bimodal_session.active_ids
        pop_filter(bimodal_session)
        assert bimodal_session.active_ids == before
        assert bimodal_session.filters == []

    def test_reset_clears_all(self, bimodal_session):
        apply_filter(bimodal_session, 0, -1.0, 0.0)
        apply_filter(bimodal_session, 1, -1.0, 0.0)
        reset(bimodal_session)
        assert bimodal_session.filters == []
        assert len(bimodal_session.active_ids) == bimodal_session.matrix.n_samples

    def test_monotonicity_on_random_sequences(self):
        rng = np.random.default_rng(9)
        matrix = make_matrix(rng.uniform(-1, 1, size=(60, 8)))
        for _ in range(50):
            session = Session(matrix)
            previous = set(session.active_ids)
            for _ in range(6):
                feature = int(rng.integers(0, 8))
                lo, hi = np.sort(rng.uniform(-1, 1, 2))
                try:
                    apply_filter(session, feature, lo, hi)
                except EmptySelectionError:
                    continue
                current = set(session.active_ids)
                assert current <= previous
                previous = current

    def test_order_independence_on_random_sequences(self):
        rng = np.random.default_rng(11)
        matrix = make_matrix(rng.uniform(-1, 1, size=(60, 8)))
        for _ in range(30):
            session = Session(matrix)
            applied = []
            for _ in range(5):
                feature = int(rng.integers(0, 8))
                lo, hi = np.sort(rng.uniform(-1, 1, 2))
                try:
                    apply_filter(session, feature, lo, hi)
                    applied.append((feature, lo, hi))
                except EmptySelectionError:
                    pass
            expected = session.active_ids
            perm = rng.permutation(len(applied))
            replay = Session(matrix)
            for i in perm:
                feature, lo, hi = applied[i]
                apply_filter(replay, feature, lo, hi)
            assert replay.active_ids == expected


class TestSubglobal:
    def test_no_filters_equals_global(self, bimodal_session):
        direct = build_aggregated_cam(bimodal_session.matrix, "mean", "entropy")
        via_session = subglobal_cam(bimodal_session, "mean", "entropy")
        np.testing.assert_array_equal(via_session.impact, direct.impact)
        np.testing.assert_array_equal(via_session.variability, direct.variability)
        assert via_session.n_samples == direct.n_samples

    def test_singleton_equals_local_cam_with_zero_variability(self):
        rng = np.random.default_rng(2)
        values = rng.uniform(-1, 1, size=(8, 5))
        session = Session(make_matrix(values))
        target = 3
        v = values[target, 2]
        apply_filter(session, 2, v, v)
        assert session.active_ids == [f"s:{target}"]
        out = subglobal_cam(session, "kde_mode", "gini")
        np.testing.assert_array_equal(out.impact, values[target])
        np.testing.assert_array_equal(out.variability, np.zeros(5))

    def test_bimodal_split_means_fall_in_mode_ranges(self, bimodal_session):
        low_side = Session(bimodal_session.matrix)
        apply_filter(low_side, 0, -1.0, 0.0)
        high_side = Session(bimodal_session.matrix)
        apply_filter(high_side, 0, 0.0, 1.0)
        low_mean = subglobal_cam(low_side, "mean", "variance").impact[0]
        high_mean = subglobal_cam(high_side, "mean", "variance").impact[0]
        assert -0.9 <= low_mean <= -0.5
        assert 0.5 <= high_mean <= 0.9


class TestAnnotations:
    def test_set_then_clear(self, bimodal_session):
        annotate(bimodal_session, 2, "interesting")
        assert bimodal_session.annotations == {2: "interesting"}
        annotate(bimodal_session, 2, None)
        assert bimodal_session.annotations == {}

    def test_reannotation_overwrites(self, bimodal_session):
        annotate(bimodal_session, 1, "interesting")
        annotate(bimodal_session, 1, "irrelevant")
        assert bimodal_session.annotations == {1: "irrelevant"}

    def test_annotations_survive_filter_operations(self, bimodal_session):
        annotate(bimodal_session, 0, "interesting")
        apply_filter(bimodal_session, 0, -1.0, 0.0)
        pop_filter(bimodal_session)
        reset(bimodal_session)
        assert bimodal_session.annotations == {0: "interesting"}

    def test_unknown_status_rejected(self, bimodal_session):
        with pytest.raises(ContractViolationError):
            annotate(bimodal_session, 0, "meh")

    def test_export_replays_drill_down(self, bimodal_session):
        apply_filter(bimodal_session, 0, -1.0, 0.0)
        annotate(bimodal_session, 3, "irrelevant")
        record = bimodal_session.to_dict()
        assert record["class_index"] == 0
        assert record["filters"] == [{"feature_index": 0, "lo": -1.0, "hi": 0.0}]
        assert record["annotations"] == {"3": "irrelevant"}
        assert set(record["active_ids"]) <= {f"s:{i}" for i in range(20)}
