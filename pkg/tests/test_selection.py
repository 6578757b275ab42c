"""Tests for penalized selection and the slope heuristic."""
import math

import pytest

from ising_neigh.config import default_c_grid
from ising_neigh.errors import InputError
from ising_neigh.sampler import SampleSet
from ising_neigh.selection import (
    LEDGER_COLUMNS,
    CandidateCollection,
    CandidateStats,
    calibrate_from_stats,
    enumerate_collection,
    max_drop_index,
    penalty,
    penalty_numerator,
    select_from_stats,
    select_model,
    slope_calibrate,
    slope_select,
)


class TestCollections:
    def test_ordering(self):
        assert list(enumerate_collection([3, 1, 2], 2)) == [
            (), (1,), (2,), (3,), (1, 2), (1, 3), (2, 3),
        ]

    def test_size(self):
        collection = CandidateCollection(tuple(range(8)), 3)
        assert collection.size == 1 + 8 + 28 + 56
        assert len(list(collection)) == collection.size

    def test_for_site_excludes_target(self):
        collection = CandidateCollection.for_site([0, 1, 2, 3], 2, 8)
        assert collection.universe == (0, 1, 3)
        assert all(2 not in V for V in collection)

    def test_powerset(self):
        assert len(CandidateCollection.powerset([5, 6, 7])) == 8

    def test_negative_card(self):
        with pytest.raises(InputError):
            CandidateCollection((1, 2), -1)


class TestPenalty:
    def test_empty_set(self):
        samples = SampleSet.from_spins([[1, 1]] * 100, [0, 1])
        assert penalty(samples, 0, (), math.e) == pytest.approx(0.23675, abs=1e-5)

    def test_forms(self):
        standard = penalty_numerator("standard", 100, math.e, 4)
        gamma = penalty_numerator("gamma", 100, math.e, M=4)
        efficient = penalty_numerator("efficient", 100, math.e, kappa=2.0)
        assert standard == pytest.approx(math.log(400) + 1)
        assert gamma == pytest.approx(3 * math.log(100) + 1)
        assert efficient == pytest.approx(2 * math.log(100) + 1)

    def test_delta_must_exceed_one(self):
        with pytest.raises(InputError):
            penalty_numerator("standard", 100, 1.0)

    def test_unknown_form(self):
        with pytest.raises(InputError):
            penalty_numerator("cubic", 100, 10.0)


def _stats():
    return [
        CandidateStats((), 0.5, 1.0, 0.1),
        CandidateStats((1,), 0.9, 0.25, 0.5),
    ]


class TestArgmin:
    def test_small_constant_prefers_fit(self):
        assert select_from_stats(_stats(), 0.25).chosen == (1,)

    def test_large_constant_prefers_small_set(self):
        result = select_from_stats(_stats(), 2.0)
        assert result.chosen == ()
        assert result.score == pytest.approx(-0.3)

    def test_tie_goes_to_smaller_set(self):
        stats = [
            CandidateStats((2,), 0.7, 1.0, 0.0),
            CandidateStats((1,), 0.7, 1.0, 0.0),
            CandidateStats((1, 2), 0.7, 1.0, 0.0),
        ]
        assert select_from_stats(stats, 1.0).chosen == (1,)

    def test_negative_constant(self):
        with pytest.raises(InputError):
            select_from_stats(_stats(), -1.0)

    def test_empty_collection(self):
        with pytest.raises(InputError):
            select_from_stats([], 1.0)

    def test_ledger(self):
        result = select_from_stats(_stats(), 0.25, with_ledger=True)
        frame = result.ledger_frame()
        assert list(frame.columns) == LEDGER_COLUMNS
        assert len(frame) == 2

    def test_ledger_requires_flag(self):
        with pytest.raises(InputError):
            select_from_stats(_stats(), 0.25).ledger_frame()


class TestSlopeHeuristic:
    def test_two_regime_profile(self):
        grid = [0.1, 0.2, 0.3, 0.4, 0.5]
        k, drops = max_drop_index([8, 8, 8, 1, 1])
        assert grid[k] == 0.4
        assert drops == [0, 0, 7, 0]

    def test_last_index_on_ties(self):
        k, _ = max_drop_index([3, 2, 2, 1])
        assert k == 3

    def test_calibration_from_stats(self):
        grid = [0.25, 0.5, 0.75, 1.25, 1.5]
        calibration = calibrate_from_stats(_stats(), 100, grid, "dimension")
        assert calibration.chosen == [(1,), (1,), (1,), (), ()]
        assert calibration.index == 3
        assert calibration.c_min == 1.25
        assert calibration.final_constant == 2.5
        assert list(calibration.profile()["size"]) == [1, 1, 1, 0, 0]

    def test_variance_measure(self):
        grid = [0.25, 0.5, 0.75, 1.25, 1.5]
        calibration = calibrate_from_stats(_stats(), 100, grid, "variance")
        # complexities (100 * 0.25)^-1/2 = 0.2 then (100 * 1)^-1/2 = 0.1
        assert calibration.complexities[0] == pytest.approx(0.2)
        assert calibration.complexities[-1] == pytest.approx(0.1)
        assert calibration.c_min == 1.25

    def test_grid_validation(self):
        with pytest.raises(InputError):
            calibrate_from_stats(_stats(), 100, [1.0], "dimension")
        with pytest.raises(InputError):
            calibrate_from_stats(_stats(), 100, [1.0, 0.5], "dimension")


class TestOnSamples:
    def test_select_model(self, grid_samples):
        collection = CandidateCollection.for_site(grid_samples.site_labels, 4, 2)
        result = select_model(grid_samples, 4, collection, 1.0, 10.0, with_ledger=True)
        assert result.chosen in set(collection)
        assert len(result.ledger) == collection.size

    def test_workers_agree(self, grid_samples):
        collection = CandidateCollection.for_site(grid_samples.site_labels, 4, 2)
        serial = select_model(grid_samples, 4, collection, 0.5, 10.0)
        threaded = select_model(grid_samples, 4, collection, 0.5, 10.0, workers=3)
        assert serial.chosen == threaded.chosen
        assert serial.score == threaded.score

    def test_slope_select(self, grid_samples):
        collection = CandidateCollection.for_site(grid_samples.site_labels, 4, 2)
        grid = default_c_grid(20)
        result = slope_select(grid_samples, 4, collection, grid, "variance")
        calibration = slope_calibrate(grid_samples, 4, collection, grid, "variance")
        assert result.C == pytest.approx(2 * calibration.c_min)
        assert result.calibration.index == calibration.index

    def test_unknown_site(self, grid_samples):
        collection = CandidateCollection((0, 1), 1)
        with pytest.raises(InputError):
            select_model(grid_samples, 99, collection, 1.0, 10.0)
