import numpy as np
import pytest

from clusterlab.enums.model import Boundary
from clusterlab.model import ModelParams


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def obc8() -> ModelParams:
    return ModelParams.critical(8, Boundary.OBC)


@pytest.fixture
def pbc8() -> ModelParams:
    return ModelParams.critical(8, Boundary.PBC)
