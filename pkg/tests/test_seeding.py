import logging
from itertools import combinations

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.errors import InvalidParameterError
from src.geometry import CenterSet, ClusteringParams, WeightedPointSet, cost_z
from src.seeding import dz_seed, local_search_refine, solution_from_centers


def two_clusters(n_each=50, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_each, 2))
    b = rng.normal(size=(n_each, 2)) + np.array([100.0, 0.0])
    return WeightedPointSet.unweighted(np.vstack([a, b]))


def test_exact_cover_has_zero_cost():
    P = WeightedPointSet.unweighted([[0.0, 0.0], [1.0, 0.0], [0.0, 5.0]])
    sol = dz_seed(P, ClusteringParams(k=3), seed=1)
    assert sol.total_cost == 0.0
    assert sorted(sol.center_indices.tolist()) == [0, 1, 2]
    assert_array_equal(sol.deltas, np.zeros(3))


def test_singleton():
    P = WeightedPointSet.unweighted([[4.0, 2.0]])
    sol = dz_seed(P, ClusteringParams(k=1), seed=0)
    assert_array_equal(sol.centers.centers, [[4.0, 2.0]])
    assert sol.deltas.tolist() == [0.0]


def test_too_few_points():
    P = WeightedPointSet.unweighted([[0.0], [1.0]])
    with pytest.raises(InvalidParameterError):
        dz_seed(P, ClusteringParams(k=3), seed=0)


def test_separated_clusters_within_constant_of_optimum():
    P = two_clusters()
    params = ClusteringParams(k=2, z=2.0)
    sol = dz_seed(P, params, seed=4)
    best = min(cost_z(P, CenterSet(P.points[list(pair)]), 2.0)
               for pair in combinations(range(P.n), 2))
    assert sol.total_cost <= 5 * best


def test_deterministic_and_consistent(mixture):
    params = ClusteringParams(k=4, z=1.0)
    a = dz_seed(mixture, params, seed=9)
    b = dz_seed(mixture, params, seed=9)
    assert_array_equal(a.center_indices, b.center_indices)
    assert a.total_cost == pytest.approx(cost_z(mixture, a.centers, 1.0), rel=1e-9)
    assert a.cluster_sizes.sum() == mixture.n
    assert a.total_cost == pytest.approx(float(np.sum(a.cluster_sizes * a.deltas)), rel=1e-9)


def test_duplicate_centers_warn(caplog):
    P = WeightedPointSet.unweighted(np.ones((5, 2)))
    with caplog.at_level(logging.WARNING):
        sol = dz_seed(P, ClusteringParams(k=3), seed=2)
    assert 'duplicate' in caplog.text
    assert sol.total_cost == 0.0


def test_local_search_zero_budget_is_identity(mixture):
    params = ClusteringParams(k=4)
    sol = dz_seed(mixture, params, seed=1)
    assert local_search_refine(mixture, sol, params, max_swaps=0) is sol


def test_local_search_fixed_point():
    P = WeightedPointSet.unweighted([[0.0], [3.0], [7.0]])
    params = ClusteringParams(k=3)
    sol = solution_from_centers(P, np.array([0, 1, 2]), 2.0)
    assert local_search_refine(P, sol, params, max_swaps=3, seed=5) is sol


def test_local_search_fixes_misplaced_center():
    P = two_clusters()
    params = ClusteringParams(k=2)
    bad = solution_from_centers(P, np.array([0, 1]), 2.0)
    refined = local_search_refine(P, bad, params, max_swaps=2, seed=3)
    assert refined.total_cost < bad.total_cost
    assert refined.total_cost == pytest.approx(cost_z(P, refined.centers, 2.0), rel=1e-9)


def test_local_search_never_increases(mixture):
    params = ClusteringParams(k=4, z=1.0)
    sol = dz_seed(mixture, params, seed=12)
    assert local_search_refine(mixture, sol, params, max_swaps=2, seed=12).total_cost <= sol.total_cost
