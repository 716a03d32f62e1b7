"""Shared fixtures: small grids, seeded generators and weights.

Grids stay at 64 or 128 points so the whole suite runs in seconds; the
large production grids are only exercised by tests marked ``slow``.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Make the repo root importable so `osgood_carleman` resolves without install.
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from osgood_carleman.helpers import make_rng  # noqa: E402
from osgood_carleman.osgood_weight import CarlemanWeight, get_modulus  # noqa: E402
from osgood_carleman.spectral_core import TorusGrid  # noqa: E402


@pytest.fixture
def grid64():
    return TorusGrid(1, 64, 2.0 * np.pi)


@pytest.fixture
def grid128():
    return TorusGrid(1, 128, 2.0 * np.pi)


@pytest.fixture
def grid2d():
    return TorusGrid(2, 32, 2.0 * np.pi)


@pytest.fixture
def rng():
    return make_rng(7, "tests")


@pytest.fixture
def linear_mu():
    return get_modulus("linear")


@pytest.fixture
def linear_weight(linear_mu):
    """Weight for mu(s) = s, alpha 1/2, T 1 and gamma 8."""
    return CarlemanWeight(linear_mu, 8.0, 1.0, 0.5, 1e150)
