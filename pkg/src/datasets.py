import logging
from typing import Any, Dict

import numpy as np

from .errors import ConfigError
from .geometry import WeightedPointSet
from .lowerbound import build_instance
from .rng import derive_rng

logger = logging.getLogger(__name__)

GENERATOR_PARAMS = {
    'gaussian-mixture': {'n', 'd', 'components', 'spread'},
    'uniform-cube': {'n', 'd'},
    'lb-instance': {'special_case', 'ground_size'},
}
GENERATORS = tuple(GENERATOR_PARAMS)


def gaussian_mixture(n: int, d: int, components: int, spread: float, seed: int,
                     box: float = 10.0) -> WeightedPointSet:
    """Balanced mixture: means uniform in [-box, box]^d, isotropic noise of std `spread`."""
    rng = derive_rng(seed, 'dataset', 'gaussian-mixture')
    means = rng.uniform(-box, box, size=(components, d))
    labels = np.arange(n) % components
    points = means[labels] + rng.normal(0.0, spread, size=(n, d))
    return WeightedPointSet.unweighted(points, d)


def uniform_cube(n: int, d: int, seed: int) -> WeightedPointSet:
    rng = derive_rng(seed, 'dataset', 'uniform-cube')
    return WeightedPointSet.unweighted(rng.uniform(0.0, 1.0, size=(n, d)), d)


def check_params(name: str, params: Dict[str, Any]):
    if name not in GENERATOR_PARAMS:
        raise ConfigError(f"unknown dataset generator {name!r}; choose from {', '.join(GENERATORS)}")
    if not isinstance(params, dict):
        raise ConfigError(f"dataset params for {name!r} must be an object")
    unknown = sorted(set(params) - GENERATOR_PARAMS[name])
    if unknown:
        raise ConfigError(f"unknown parameters for {name!r}: {', '.join(unknown)}")


def generate(name: str, params: Dict[str, Any], seed: int, k: int = 2, z: float = 2.0,
             eps: float = 0.3) -> WeightedPointSet:
    """Build a named dataset; lb-instance takes k, z, eps from the cell."""
    check_params(name, params)
    try:
        if name == 'gaussian-mixture':
            return gaussian_mixture(int(params['n']), int(params['d']),
                                    int(params.get('components', k)),
                                    float(params.get('spread', 1.0)), seed)
        if name == 'uniform-cube':
            return uniform_cube(int(params['n']), int(params['d']), seed)
        if name == 'lb-instance':
            special = params.get('special_case', False)
            return build_instance(k, z, None if special else eps, seed,
                                  ground_size=params.get('ground_size')).points
    except KeyError as e:
        raise ConfigError(f"dataset {name!r} is missing parameter {e}")
