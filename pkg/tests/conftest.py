import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.datasets import gaussian_mixture
from src.geometry import WeightedPointSet


@pytest.fixture
def mixture():
    return gaussian_mixture(n=600, d=4, components=4, spread=1.0, seed=3)


@pytest.fixture
def small_points():
    rng = np.random.default_rng(11)
    return WeightedPointSet.unweighted(rng.normal(size=(40, 3)))
