import sys
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(autouse=True)
def _quiet_boundary_warnings():
    """Pulse tails legitimately sit above the ideal decay level in many
    tests; keep the logs readable."""
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="weak boundary decay")
        warnings.filterwarnings("ignore", message=".*outer 10% of the time window.*")
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
