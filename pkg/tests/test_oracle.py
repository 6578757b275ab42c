"""Tests for exact-enumeration ground truth."""
import math

import numpy as np
import pytest
from scipy.special import expit

from ising_neigh.errors import CapacityError, InputError
from ising_neigh.model import (
    conditional_full,
    from_couplings,
    model_constants,
    potential_omega,
)
from ising_neigh.oracle import (
    RiskOracle,
    ScreeningSandwich,
    bias,
    exact_conditional_sub,
    min_marginal,
    oracle_model,
    psi,
    risk,
    screening_sandwich,
    true_omega_full,
    variance_term,
)
from ising_neigh.sampler import SampleSet, joint_distribution


class TestTwoSite:
    def test_bias_of_empty_set(self, two_site_model):
        assert bias(two_site_model, 0, ()) == pytest.approx(0.098688, abs=1e-6)

    def test_bias_of_neighborhood(self, two_site_model):
        assert bias(two_site_model, 0, (1,)) == pytest.approx(0.0, abs=1e-12)

    def test_true_omega(self, two_site_model):
        omega = true_omega_full(two_site_model, 0, 1)
        assert omega == pytest.approx(0.197375, abs=1e-6)

    def test_omega_sandwich(self, two_site_model):
        constants = model_constants(two_site_model)
        r = constants.r
        omega_f = potential_omega(two_site_model, 0, 1)
        omega_g = true_omega_full(two_site_model, 0, 1)
        lower = 2 * math.exp(-2 * r) * (1 + math.exp(2 * r)) ** -2 * omega_f
        upper = constants.C_r_star * omega_f
        assert lower == pytest.approx(0.17273, abs=1e-5)
        assert upper == pytest.approx(0.65532, abs=1e-5)
        assert lower <= omega_g <= upper

    def test_single_sample_risk(self, two_site_model):
        samples = SampleSet.from_spins(np.array([[1, 1]]), [0, 1])
        assert risk(samples, two_site_model, 0, ()) == pytest.approx(0.59869, abs=1e-5)

    def test_marginals(self, two_site_model):
        exact = exact_conditional_sub(two_site_model, 0, (1,))
        assert exact.plus[1] == pytest.approx(expit(0.4))
        assert exact.value({0: -1, 1: -1}) == pytest.approx(expit(0.4))
        assert min_marginal(two_site_model, (1,)) == pytest.approx(0.5)

    def test_target_in_scope(self, two_site_model):
        with pytest.raises(InputError):
            bias(two_site_model, 0, (0, 1))


class TestGrid:
    def test_markov_blanket_has_no_bias(self, grid):
        assert bias(grid, 4, (1, 3, 5, 7)) == pytest.approx(0.0, abs=1e-12)

    def test_partial_neighborhood_has_bias(self, grid):
        oracle = RiskOracle(grid, 4)
        assert oracle.bias((1, 3)) > oracle.bias((1, 3, 5)) > 0.0

    def test_sup_norms(self, grid):
        oracle = RiskOracle(grid, 4)
        assert oracle.sup_norm_full() == pytest.approx(expit(1.6))
        assert oracle.sup_norm_sub(()) == pytest.approx(0.5)

    def test_capacity(self, grid):
        with pytest.raises(CapacityError):
            RiskOracle(grid, 4, exact_cap=5)


class TestSampleDependent:
    def test_variance_shrinks(self, two_site_samples, two_site_model):
        assert variance_term(two_site_samples, two_site_model, 0, (1,)) < 0.03

    def test_oracle_model(self, two_site_samples, two_site_model):
        assert oracle_model(two_site_samples, two_site_model, 0, [(), (1,)]) == (1,)

    def test_best_risk(self, two_site_samples, two_site_model):
        oracle = RiskOracle(two_site_model, 0)
        V, value = oracle.best(two_site_samples, [(), (1,)])
        assert value == oracle.risk(two_site_samples, V)
        with pytest.raises(InputError):
            oracle.best(two_site_samples, [])

    def test_psi(self, two_site_samples, two_site_model):
        # v = 1 admits only sets with p-hat-minus = 1, i.e. the empty set
        small = psi(two_site_model, two_site_samples, 0, 1.0)
        large = psi(two_site_model, two_site_samples, 0, 100.0)
        assert small == pytest.approx(0.098688, abs=1e-6)
        assert large == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(InputError):
            psi(two_site_model, two_site_samples, 0, 0.0)


class TestScreeningSandwich:
    def test_holds(self):
        assert ScreeningSandwich((1,), (1, 2), (1, 2, 3)).holds
        assert not ScreeningSandwich((1, 4), (1, 2), (1, 2, 3)).holds
        assert not ScreeningSandwich((), (1, 5), (1, 2, 3)).holds

    def test_large_threshold_empties_lower_set(self, grid):
        universe = [s for s in grid.sites if s != 4]
        check = screening_sandwich(
            grid, 4, universe, (), eta=10.0, n=1000, M=9, delta=10.0
        )
        assert check.lower == ()
        assert check.holds

    def test_zero_threshold_upper_contains_neighbors(self, grid):
        universe = [s for s in grid.sites if s != 4]
        check = screening_sandwich(
            grid, 4, universe, (1, 3), eta=0.0, n=1000, M=9, delta=10.0
        )
        assert set(check.upper) >= {1, 3, 5, 7}


def _random_model(seed, max_sites, density=0.5):
    """Symmetric couplings drawn uniformly from [-1, 1] on a random edge set."""
    rng = np.random.default_rng(seed)
    size = int(rng.integers(2, max_sites + 1))
    couplings = {
        (a, b): float(rng.uniform(-1.0, 1.0))
        for a in range(size)
        for b in range(a + 1, size)
        if rng.random() < density
    }
    return from_couplings(range(size), couplings), rng


def _configuration(model, code):
    return {s: 1 if (code >> k) & 1 else -1 for k, s in enumerate(model.sites)}


def _random_cases(count_models=40, per_model=5, max_sites=8):
    for seed in range(count_models):
        model, rng = _random_model(1000 + seed, max_sites)
        for _ in range(per_model):
            i = int(rng.integers(model.size))
            others = [s for s in model.sites if s != i]
            V = tuple(s for s in others if rng.random() < 0.5)
            yield model, i, V


RANDOM_CASES = list(_random_cases())


@pytest.mark.parametrize("seed", range(50))
def test_joint_matches_full_conditional(seed):
    model, rng = _random_model(seed, 12)
    probs = joint_distribution(model).probabilities
    codes = rng.integers(0, 2 ** model.size, size=8)
    for i in model.sites:
        others = [s for s in model.sites if s != i]
        exact = exact_conditional_sub(model, i, others)
        pos = model.require_site(i)
        for code in codes:
            x = _configuration(model, int(code))
            p, q = probs[code], probs[code ^ (1 << pos)]
            expected = conditional_full(model, i, x)
            assert p / (p + q) == pytest.approx(expected, abs=1e-12)
            assert exact.value(x) == pytest.approx(expected, abs=1e-12)


class TestRandomModels:
    """Bias, sup-norm and marginal bounds on random models of at most 8 sites."""

    SLACK = 1e-10

    @pytest.mark.parametrize("model,i,V", RANDOM_CASES)
    def test_bias_sandwich(self, model, i, V):
        constants = model_constants(model)
        outside = [j for j in model.sites if j != i and j not in V]
        missing = sum(potential_omega(model, i, j) for j in outside)
        value = bias(model, i, V)
        assert constants.c_r_star * missing <= value + self.SLACK
        assert value <= constants.C_r_star * missing + self.SLACK

    @pytest.mark.parametrize("model,i,V", RANDOM_CASES)
    def test_sup_norm_gap_dominates_bias(self, model, i, V):
        oracle = RiskOracle(model, i)
        gap = oracle.sup_norm_full() - oracle.sup_norm_sub(V)
        assert model_constants(model).kappa_min * oracle.bias(V) <= gap + self.SLACK

    @pytest.mark.parametrize("model,i,V", RANDOM_CASES)
    def test_pattern_probability_floor(self, model, i, V):
        r = model_constants(model).r
        floor = (1 + math.exp(2 * r)) ** -len(V)
        assert min_marginal(model, V) >= floor - self.SLACK

    @pytest.mark.parametrize("model,i,V", RANDOM_CASES)
    def test_omega_sandwich(self, model, i, V):
        constants = model_constants(model)
        r = constants.r
        oracle = RiskOracle(model, i)
        for j in model.sites:
            if j == i:
                continue
            omega_f = potential_omega(model, i, j)
            lower = 2 * math.exp(-2 * r) * (1 + math.exp(2 * r)) ** -2 * omega_f
            omega_g = oracle.true_omega(j)
            assert lower <= omega_g + self.SLACK
            assert omega_g <= constants.C_r_star * omega_f + self.SLACK
