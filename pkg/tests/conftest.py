import numpy as np
import pytest

from mtmlab.fields import Grid


@pytest.fixture(scope="session")
def grid():
    """The default laboratory grid: [-30, 30), 4096 points."""
    return Grid.symmetric()


@pytest.fixture(scope="session")
def grid_small():
    return Grid.symmetric(30.0, 1024)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
