import pathlib

import numpy as np
import pytest

from lfbgw.io import parse_model
from lfbgw.model import ModelTriplet

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


def load(name):
    return parse_model(MODELS / f"{name}.lfm")


TRIPLET_FILES = sorted(p.stem for p in MODELS.glob("*.lfm") if isinstance(parse_model(p), ModelTriplet))
LIFE_FILES = sorted(p.stem for p in MODELS.glob("*.lfm") if not isinstance(parse_model(p), ModelTriplet))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def critical1():
    return ModelTriplet([[0.5]], [1.0], 1.0)


@pytest.fixture
def worked2():
    """Equal row sums 0.3, m = 1: rho = 0.6, u = 1."""
    return ModelTriplet([[0.1, 0.2], [0.3, 0.0]], [0.5, 0.5], 1.0)


@pytest.fixture
def left2():
    """g H = 0.4 g with m = 1.5: critical with v = g."""
    return ModelTriplet([[0.2, 0.4], [0.1, 0.2]], [1 / 3, 2 / 3], 1.5)
