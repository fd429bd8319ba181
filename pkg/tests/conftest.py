"""
Shared fixtures; puts the project root on sys.path like the scripts do.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from optiq.problems.objectives import make_quadratic  # noqa: E402
from optiq.problems.test_functions import make_test_function  # noqa: E402


@pytest.fixture
def quadratic():
    return make_test_function("quadratic_example")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, n, low=1.0, high=10.0):
    """Random SPD matrix with eigenvalues uniform in [low, high]."""
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(low, high, size=n)
    return (V * lam) @ V.T


def random_quadratic(rng, n, low=1.0, high=10.0):
    return make_quadratic(random_spd(rng, n, low, high), rng.standard_normal(n))
