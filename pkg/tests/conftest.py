"""Shared fixtures: seeded generators and desk-scale search budgets"""
import numpy as np
import pytest

from summing import SearchParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def search():
    return SearchParams.from_config(restarts=3, iterations=300, psd_restarts=8, cert_rounds=8, seed=0)


@pytest.fixture
def quick_search():
    return SearchParams.from_config(restarts=1, iterations=100, psd_restarts=4, cert_rounds=4, seed=0)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def distance_search():
    return SearchParams.from_config(restarts=1, iterations=100, psd_restarts=4, cert_rounds=1, seed=0)
