import numpy as np
import pytest

from hankeldesign import PlantOracle, random_minimal_system


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_state_plant(n, m, seed):
    """Random minimal system wrapped in a STATE-mode oracle, seeded."""
    sysm = random_minimal_system(n, m, 1, seed=seed)
    return sysm, PlantOracle(sysm, PlantOracle.STATE, seed=seed + 1)


def make_output_plant(n, m, p, seed):
    sysm = random_minimal_system(n, m, p, seed=seed)
    return sysm, PlantOracle(sysm, PlantOracle.OUTPUT, seed=seed + 1)
