"""Shared fixtures: small models and sample sets."""
import numpy as np
import pytest

from ising_neigh.config import SamplerConfig
from ising_neigh.model import from_couplings, grid_model
from ising_neigh.sampler import SampleSet, sample


@pytest.fixture
def two_site_model():
    """Classical two-site model with J = 0.2 and no field."""
    return from_couplings([0, 1], {(0, 1): 0.2})


@pytest.fixture
def grid():
    return grid_model()


@pytest.fixture
def tiny_samples():
    """Four rows over sites 0 and 1: (+,+), (+,+), (+,-), (-,-)."""
    spins = np.array([[1, 1], [1, 1], [1, -1], [-1, -1]])
    return SampleSet.from_spins(spins, [0, 1])


@pytest.fixture(scope="session")
def grid_samples():
    return sample(grid_model(), 2000, SamplerConfig(seed=1))


@pytest.fixture(scope="session")
def two_site_samples():
    return sample(from_couplings([0, 1], {(0, 1): 0.2}), 20000, SamplerConfig(seed=3))
