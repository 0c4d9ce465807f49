"""Shared fixtures: the generator battery used across the test modules."""

import numpy as np
import pytest

from wrapcop.generator import Beta, Mixture, Triangular, TruncNormal, Uniform, VonMises

BATTERY = {
    "Uniform": Uniform(),
    "Triangular(1,1)": Triangular(1.0, 1.0),
    "Beta(3/2,3/2)": Beta(1.5, 1.5),
    "Beta(2,5)": Beta(2.0, 5.0),
    "TruncNormal(0.5,0.1)": TruncNormal(0.5, 0.1),
    "VonMises(2,1)": VonMises(2.0, 1.0),
    "Mixture(1/4,3/4)": Mixture(0.25, TruncNormal(0.25, 0.1), TruncNormal(0.75, 0.1)),
}

SIGNATURES_2D = [(0, 0), (0, 1), (1, 0), (1, 1)]


@pytest.fixture(params=list(BATTERY), ids=list(BATTERY))
def battery_generator(request):
    return BATTERY[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
