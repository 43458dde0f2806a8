import numpy as np
import pytest

from fraclap.core_types import GridFunction, make_params
from fraclap.geometry import Domain


def gaussian(params, center, width, scale=None):
    c = np.asarray(center, dtype=float)
    sc = np.ones(params.n) if scale is None else np.asarray(scale, dtype=float)
    return GridFunction.from_function(params, lambda x: np.exp(-(((x - c) / sc) ** 2).sum(-1) / (2 * width ** 2)))


@pytest.fixture
def grid64():
    return make_params(2, 0.5, 64, 8.0)


@pytest.fixture
def grid128():
    return make_params(2, 0.5, 128, 8.0)


@pytest.fixture
def unit_disk():
    return Domain.ball([0.0, 0.0], 1.0)


@pytest.fixture
def annulus_data():
    from fraclap.exterior_data import ExteriorData
    return ExteriorData({"kind": "annulus_bump", "center": [0, 0], "radius": 1.5, "width": 0.3})
