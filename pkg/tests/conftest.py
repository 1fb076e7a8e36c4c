import itertools

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20161016)


def enumerate_configs(n):
    """All 2^n configurations as an int array, independent of the oracle's bitmask table."""
    return np.array(list(itertools.product((-1, 1), repeat=n)), dtype=np.int64)


def brute_weights(n, beta):
    s = enumerate_configs(n)
    energy = sum(s[:, i] * s[:, (i + 1) % n] for i in range(n))
    return s, np.exp(beta * energy)
