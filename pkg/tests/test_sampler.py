"""Tests for the exact and Gibbs samplers and the sample file formats."""
import numpy as np
import pytest
from scipy.special import expit
from scipy.stats import binomtest, chi2_contingency

from ising_neigh.config import SamplerConfig
from ising_neigh.errors import CapacityError, InputError
from ising_neigh.model import from_couplings, grid_model, random_sparse_model
from ising_neigh.sampler import (
    SampleSet,
    derive_seed,
    exact_sampler,
    gibbs_sampler,
    joint_distribution,
    load_samples,
    parse_samples_text,
    sample,
    samples_to_text,
    save_samples,
)


def _agreement(samples):
    spins = samples.spins
    return float(np.mean(spins[:, 0] == spins[:, 1]))


class TestSampleSet:
    def test_from_spins(self, tiny_samples):
        assert tiny_samples.n == 4
        assert tiny_samples.M == 2
        assert tiny_samples.spins.tolist() == [[1, 1], [1, 1], [1, -1], [-1, -1]]
        assert tiny_samples.require_site(1) == 1

    def test_invalid_entries(self):
        with pytest.raises(InputError):
            SampleSet.from_spins(np.array([[1, 0]]), [0, 1])

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            SampleSet.from_spins(np.array([[1, 1]]), [0, 1, 2])

    def test_duplicate_labels(self):
        with pytest.raises(InputError):
            SampleSet.from_spins(np.array([[1, 1]]), [3, 3])

    def test_unobserved_site(self, tiny_samples):
        with pytest.raises(InputError):
            tiny_samples.require_site(9)


def test_derive_seed():
    assert derive_seed(5, 3) == 6
    assert derive_seed(0, 7) == 7


class TestJointDistribution:
    def test_normalized(self, grid):
        joint = joint_distribution(grid)
        assert joint.probabilities.size == 2 ** 9
        assert joint.probabilities.sum() == pytest.approx(1.0, abs=1e-12)

    def test_two_site_values(self, two_site_model):
        joint = joint_distribution(two_site_model).as_dict()
        same = joint[(1, 1)] + joint[(-1, -1)]
        assert same == pytest.approx(expit(0.4), abs=1e-12)
        assert joint[(1, 1)] == pytest.approx(joint[(-1, -1)])

    def test_capacity(self, grid):
        with pytest.raises(CapacityError):
            joint_distribution(grid, exact_cap=5)


class TestExactSampler:
    def test_deterministic(self, grid):
        config = SamplerConfig(seed=11)
        assert exact_sampler(grid, 300, config) == exact_sampler(grid, 300, config)
        reseeded = exact_sampler(grid, 300, config.with_seed(12))
        assert exact_sampler(grid, 300, config) != reseeded

    def test_meta(self, grid):
        samples = exact_sampler(grid, 10, SamplerConfig(seed=2))
        assert samples.meta.sampler == "exact"
        assert samples.meta.seed == 2
        assert samples.meta.model_hash == grid.fingerprint

    def test_frequencies(self, two_site_samples):
        assert _agreement(two_site_samples) == pytest.approx(expit(0.4), abs=0.02)

    def test_bad_n(self, grid):
        with pytest.raises(InputError):
            exact_sampler(grid, 0)


class TestGibbsSampler:
    def test_frequencies(self, two_site_model):
        config = SamplerConfig(seed=5, burn_in=100, thinning=5)
        samples = gibbs_sampler(two_site_model, 5000, config)
        assert samples.meta.sampler == "gibbs"
        assert _agreement(samples) == pytest.approx(expit(0.4), abs=0.03)

    def test_deterministic(self, grid):
        config = SamplerConfig(seed=9, burn_in=10, thinning=2)
        assert gibbs_sampler(grid, 300, config) == gibbs_sampler(grid, 300, config)

    def test_systematic_scan(self, grid):
        config = SamplerConfig(seed=9, burn_in=10, thinning=2, scan="systematic")
        samples = gibbs_sampler(grid, 50, config)
        assert samples.n == 50
        assert samples.meta.scan == "systematic"

    def test_zero_potential_gives_independent_fair_coins(self):
        model = from_couplings([0, 1], {})
        config = SamplerConfig(seed=11, burn_in=50, thinning=3)
        samples = gibbs_sampler(model, 2000, config)
        spins = samples.spins
        for column in (0, 1):
            ups = int((spins[:, column] == 1).sum())
            assert binomtest(ups, samples.n, 0.5).pvalue > 0.01
        table = [
            [int(((spins[:, 0] == a) & (spins[:, 1] == b)).sum()) for b in (1, -1)]
            for a in (1, -1)
        ]
        assert chi2_contingency(table, correction=False).pvalue > 0.01

    @pytest.mark.slow
    def test_matches_joint_distribution(self):
        model = from_couplings(
            range(4),
            {(0, 1): 0.3, (1, 2): -0.2, (2, 3): 0.4, (0, 3): 0.1},
            fields={1: 0.1},
        )
        config = SamplerConfig(seed=21, burn_in=1000, thinning=50)
        samples = gibbs_sampler(model, 100_000, config)
        weights = 1 << np.arange(samples.M)
        codes = samples.bits.astype(np.int64) @ weights
        observed = np.bincount(codes, minlength=2 ** samples.M) / samples.n
        expected = joint_distribution(model).probabilities
        assert 0.5 * np.abs(observed - expected).sum() <= 0.02

    @pytest.mark.slow
    def test_large_model(self):
        model = random_sparse_model(n_sites=60, target_degree=6)
        config = SamplerConfig(seed=1, burn_in=50, thinning=2)
        samples = sample(model, 200, config, kind="auto")
        assert samples.meta.sampler == "gibbs"
        assert samples.M == 60


class TestDispatch:
    def test_auto_uses_exact(self, grid):
        assert sample(grid, 10).meta.sampler == "exact"

    def test_exact_refused_beyond_cap(self):
        with pytest.raises(CapacityError):
            sample(grid_model(size=5), 10, SamplerConfig(exact_cap=20), kind="exact")

    def test_unknown_kind(self, grid):
        with pytest.raises(InputError):
            sample(grid, 10, kind="metropolis")


class TestSampleFiles:
    def test_text_round_trip(self, tmp_path, grid):
        samples = sample(grid, 50, SamplerConfig(seed=4))
        path = tmp_path / "samples.txt"
        save_samples(samples, path)
        assert load_samples(path) == samples

    def test_binary_round_trip(self, tmp_path, grid):
        samples = sample(grid, 37, SamplerConfig(seed=4))
        path = tmp_path / "samples.npz"
        save_samples(samples, path)
        assert load_samples(path) == samples

    def test_text_format(self, tiny_samples):
        text = samples_to_text(tiny_samples)
        lines = text.splitlines()
        assert lines[0] == "sites: 0,1"
        assert lines[-1] == "-1,-1"
        assert parse_samples_text(text) == tiny_samples

    def test_missing_header(self):
        with pytest.raises(InputError):
            parse_samples_text("+1,-1\n")

    def test_ragged_row(self):
        with pytest.raises(InputError):
            parse_samples_text("sites: 0,1\n+1,-1\n+1\n")

    def test_no_rows(self):
        with pytest.raises(InputError):
            parse_samples_text("sites: 0,1\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_samples(tmp_path / "nothing.txt")
