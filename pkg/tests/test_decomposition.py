import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.datasets import gaussian_mixture
from src.decomposition import (
    build_groups,
    build_rings,
    decompose,
    group_count_bound,
    verify_structure,
)
from src.geometry import CenterSet, ClusteringParams, WeightedPointSet
from src.seeding import ApproxSolution, dz_seed


def manual_solution(costs, labels, deltas):
    costs = np.asarray(costs, dtype=float)
    k = len(deltas)
    return ApproxSolution(
        centers=CenterSet(np.zeros((k, 1))),
        center_indices=np.arange(k),
        labels=np.asarray(labels),
        point_costs=costs,
        cluster_sizes=np.bincount(labels, minlength=k).astype(float),
        deltas=np.asarray(deltas, dtype=float),
        total_cost=float(costs.sum()),
    )


def test_points_on_centers_are_inner():
    P = WeightedPointSet.unweighted([[0.0], [5.0], [9.0]])
    params = ClusteringParams(k=3)
    gs = decompose(P, dz_seed(P, params, seed=0), params)
    assert gs.groups == []
    assert not gs.ring_partition.rings
    assert gs.leftover.tolist() == [1.0, 1.0, 1.0]


def test_levels_are_powers_of_two():
    P = WeightedPointSet.unweighted(np.zeros((3, 1)))
    sol = manual_solution([1.0, 2.0, 4.0], [0, 0, 0], [1.0])
    rp = build_rings(P, sol, ClusteringParams(k=1, z=2.0, eps=0.3))
    assert rp.levels.tolist() == [0, 1, 2]
    assert sorted((r.cluster, r.level) for r in rp.rings) == [(0, 0), (0, 1), (0, 2)]


def test_single_ring_is_bucket_zero():
    P = WeightedPointSet.unweighted(np.zeros((2, 1)))
    sol = manual_solution([1.0, 1.5], [0, 0], [1.0])
    params = ClusteringParams(k=1, z=2.0, eps=0.3)
    gs = build_groups(build_rings(P, sol, params), params)
    assert len(gs.groups) == 1
    assert (gs.groups[0].kind, gs.groups[0].level, gs.groups[0].bucket) == ('main', 0, 0)
    assert gs.groups[0].group_id == 'main:0:0'


def test_equal_rings_share_a_group():
    P = WeightedPointSet.unweighted(np.zeros((4, 1)))
    sol = manual_solution([1.0, 1.0, 1.0, 1.0], [0, 0, 1, 1], [1.0, 1.0])
    params = ClusteringParams(k=2, z=2.0, eps=0.3)
    gs = build_groups(build_rings(P, sol, params), params)
    assert len(gs.groups) == 1
    assert gs.groups[0].touched_clusters == frozenset({0, 1})
    assert gs.groups[0].bucket == -1


def test_far_points_form_outer_group():
    P = WeightedPointSet.unweighted(np.zeros((3, 1)))
    sol = manual_solution([1.0, 1.0, 1e6], [0, 0, 0], [1.0])
    params = ClusteringParams(k=1, z=2.0, eps=0.3)
    gs = decompose(P, sol, params)
    kinds = sorted(g.kind for g in gs.groups)
    assert kinds == ['main', 'outer']
    outer = next(g for g in gs.groups if g.kind == 'outer')
    assert outer.members.tolist() == [2] and outer.bucket == 0


def test_structure_invariants_on_mixture(mixture):
    params = ClusteringParams(k=4, z=2.0, eps=0.2)
    sol = dz_seed(mixture, params, seed=7)
    gs = decompose(mixture, sol, params)
    assert verify_structure(gs, params) == []
    assert sum(g.mass for g in gs.groups) + gs.leftover.sum() == pytest.approx(mixture.n)
    rp = gs.ring_partition
    for ring, members in rp.rings.items():
        d = rp.deltas[ring.cluster]
        for p in members:
            assert 2.0 ** ring.level * d <= rp.point_costs[p] < 2.0 ** (ring.level + 1) * d


def test_spread_within_cluster_is_flagged(mixture):
    params = ClusteringParams(k=4, z=2.0, eps=0.2)
    gs = decompose(mixture, dz_seed(mixture, params, seed=7), params)
    rp = gs.ring_partition
    shared = next(members for g in gs.groups if g.kind == 'main'
                  for c in sorted(g.touched_clusters)
                  for members in [g.members[rp.labels[g.members] == c]] if members.size >= 2)
    costs = rp.point_costs.copy()
    costs[shared[0]] = 10.0 * rp.weights.sum() * costs[shared].max()
    tampered = replace(gs, ring_partition=replace(rp, point_costs=costs))
    assert any('2·|P_' in v for v in verify_structure(tampered, params))


def test_light_rings_are_below_bucket_floor(mixture):
    params = ClusteringParams(k=8, z=2.0, eps=0.1)
    gs = decompose(mixture, dz_seed(mixture, params, seed=2), params)
    rp = gs.ring_partition
    for ring in gs.light_rings:
        level_cost = sum(rp.ring_costs[r] for r in rp.rings if r.level == ring.level)
        assert rp.ring_costs[ring] < 2.0 ** (gs.bucket_floor + 1) * level_cost


def test_rebuild_is_identical(mixture):
    params = ClusteringParams(k=4, z=1.0, eps=0.3)
    sol = dz_seed(mixture, params, seed=3)
    a, b = decompose(mixture, sol, params), decompose(mixture, sol, params)
    assert a.to_json() == b.to_json()
    for g, h in zip(a.groups, b.groups):
        assert_array_equal(g.members, h.members)


def test_group_count_within_bound():
    P = gaussian_mixture(n=1500, d=5, components=20, spread=1.0, seed=1)
    params = ClusteringParams(k=20, z=1.0, eps=0.2)
    gs = decompose(P, dz_seed(P, params, seed=1), params)
    assert len(gs.groups) <= group_count_bound(params)
    assert group_count_bound(params) == pytest.approx(6 * math.log2(100) * math.log2(5))


def test_weighted_inputs_use_total_weight():
    P = WeightedPointSet(np.array([[0.0], [1.0], [3.0]]), np.array([2.0, 1.0, 0.5]))
    sol = manual_solution([0.0, 1.0, 9.0], [0, 0, 0], [(1.0 + 4.5) / 3.5])
    params = ClusteringParams(k=1, z=2.0, eps=0.3)
    gs = decompose(P, sol, params)
    assert sum(g.mass for g in gs.groups) + gs.leftover.sum() == pytest.approx(3.5)
    assert verify_structure(gs, params) == []
