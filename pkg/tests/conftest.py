import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dyadrobust import SimulationDesign, simulate_network


@pytest.fixture
def rng():
    return np.random.default_rng(20240915)


@pytest.fixture(scope="session")
def small_network():
    """One modest simulated network reused by read-only tests."""
    return simulate_network(SimulationDesign(seed=42))


@pytest.fixture(scope="session")
def medium_network():
    """n = 400 network for sparse-regime comparisons."""
    return simulate_network(SimulationDesign(n_agents=200, n_projects=200, seed=7))
