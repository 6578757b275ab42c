"""Tests for empirical conditionals, p-hat-minus, omega and pair correlations."""
import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ising_neigh.empirical import (
    all_patterns,
    build_table,
    empirical_conditional,
    empirical_omega,
    naive_conditional,
    p_hat_min,
    pair_correlation,
    pair_correlations,
    sup_conditional,
)
from ising_neigh.errors import InputError
from ising_neigh.sampler import SampleSet


class TestTinySample:
    """Hand-counted values on the rows (+,+), (+,+), (+,-), (-,-)."""

    def test_conditionals(self, tiny_samples):
        table = build_table(tiny_samples, 0, [1])
        assert empirical_conditional(table, {0: 1, 1: 1}) == 1.0
        assert empirical_conditional(table, {0: -1, 1: 1}) == 0.0
        assert empirical_conditional(table, {0: 1, 1: -1}) == 0.5
        assert table.conditional_fraction(1, 1) == Fraction(1)

    def test_empty_scope(self, tiny_samples):
        table = build_table(tiny_samples, 0, [])
        assert empirical_conditional(table, {0: 1}) == 0.75
        assert p_hat_min(table) == 1.0
        assert sup_conditional(table) == 0.75

    def test_p_hat_min(self, tiny_samples):
        assert p_hat_min(build_table(tiny_samples, 0, [1])) == 0.5

    def test_sup_and_omega(self, tiny_samples):
        table = build_table(tiny_samples, 0, [1])
        assert sup_conditional(table) == 1.0
        assert empirical_omega(table, 1) == 0.5

    def test_pair_correlation(self, tiny_samples):
        # |4 * 2 - 3 * 2| / 16
        assert pair_correlation(tiny_samples, 0, 1) == 0.125
        assert pair_correlations(tiny_samples, 1, [0]) == {0: 0.125}

    def test_counts(self, tiny_samples):
        counts = build_table(tiny_samples, 0, [1]).counts
        assert counts == {(1, 1): 2, (1, -1): 1, (-1, 1): 0, (-1, -1): 1}
        assert sum(counts.values()) == tiny_samples.n


def test_unobserved_pattern_defaults():
    samples = SampleSet.from_spins(np.array([[1, 1, 1], [-1, 1, 1]]), [0, 1, 2])
    table = build_table(samples, 0, [1, 2])
    assert not table.fully_observed
    assert empirical_conditional(table, {0: 1, 1: -1, 2: 1}) == 0.5
    assert p_hat_min(table) == 0.5
    assert sup_conditional(table) == 0.5


def test_omega_unobserved_partner_uses_half():
    samples = SampleSet.from_spins(np.array([[1, 1], [1, 1], [-1, 1]]), [0, 1])
    table = build_table(samples, 0, [1])
    # the flipped pattern is unobserved and carries 1/2
    assert empirical_omega(table, 1) == pytest.approx(2 / 3 - 1 / 2)


class TestErrors:
    def test_target_in_scope(self, tiny_samples):
        with pytest.raises(InputError):
            build_table(tiny_samples, 0, [0, 1])

    def test_unknown_site(self, tiny_samples):
        with pytest.raises(InputError):
            build_table(tiny_samples, 0, [5])

    def test_omega_outside_scope(self, tiny_samples):
        with pytest.raises(InputError):
            empirical_omega(build_table(tiny_samples, 0, []), 1)

    def test_self_correlation(self, tiny_samples):
        with pytest.raises(InputError):
            pair_correlation(tiny_samples, 0, 0)


spin_matrices = arrays(
    np.int8,
    st.tuples(st.integers(1, 40), st.just(4)),
    elements=st.sampled_from([-1, 1]),
)


@settings(max_examples=50, deadline=None)
@given(spins=spin_matrices)
def test_table_matches_row_scan(spins):
    samples = SampleSet.from_spins(spins, [0, 1, 2, 3])
    table = build_table(samples, 0, [1, 3])
    for x in all_patterns((0, 1, 3)):
        assert empirical_conditional(table, x) == naive_conditional(samples, 0, x)


@settings(max_examples=50, deadline=None)
@given(spins=spin_matrices)
def test_bounds(spins):
    samples = SampleSet.from_spins(spins, [0, 1, 2, 3])
    table = build_table(samples, 2, [0, 1])
    assert 1 / samples.n <= p_hat_min(table) <= 1.0
    assert 0.5 <= sup_conditional(table) <= 1.0
    for j in (0, 1):
        assert 0.0 <= empirical_omega(table, j) <= 1.0
    for value in pair_correlations(samples, 2, [0, 1, 3]).values():
        assert 0.0 <= value <= 0.25


def _pattern_count(spins, columns, values):
    return sum(
        1 for row in spins if all(row[c] == v for c, v in zip(columns, values))
    )


@settings(max_examples=60, deadline=None)
@given(spins=spin_matrices, scope=st.sets(st.sampled_from([1, 2, 3]), max_size=3))
def test_p_hat_min_matches_brute_force(spins, scope):
    samples = SampleSet.from_spins(spins, [0, 1, 2, 3])
    V = sorted(scope)
    table = build_table(samples, 0, V)
    n = samples.n
    if not V:
        assert p_hat_min(table) == 1.0
        return
    smallest = min(
        _pattern_count(spins, V, values)
        for values in itertools.product((1, -1), repeat=len(V))
    )
    assert p_hat_min(table) == pytest.approx(max(1 / n, smallest / n), abs=1e-15)
    if smallest == 0:
        assert p_hat_min(table) == pytest.approx(1 / n)


@settings(max_examples=60, deadline=None)
@given(spins=spin_matrices, j=st.sampled_from([1, 2, 3]))
def test_empirical_omega_matches_brute_force(spins, j):
    samples = SampleSet.from_spins(spins, [0, 1, 2, 3])
    V = (1, 2, 3)
    table = build_table(samples, 0, V)
    largest = 0.0
    for x in all_patterns((0,) + V):
        if x[0] != 1:
            continue
        flipped = dict(x)
        flipped[j] = -x[j]
        gap = naive_conditional(samples, 0, x) - naive_conditional(samples, 0, flipped)
        largest = max(largest, abs(gap))
    assert empirical_omega(table, j) == pytest.approx(largest, abs=1e-12)
