import numpy as np
import pytest

from maglevsim.fieldmodel import default_field_model
from maglevsim.magnetics import LevitatorParams
from maglevsim.so3 import exp_so3


@pytest.fixture(scope="session")
def model():
    return default_field_model()


@pytest.fixture(scope="session")
def params():
    return LevitatorParams()


def random_rotation(rng, max_angle=np.pi):
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    return exp_so3(axis * rng.uniform(0.0, max_angle))


def random_position(rng, scale=0.03):
    return rng.uniform(-scale, scale, 3)
