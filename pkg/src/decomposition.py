import math
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .geometry import ClusteringParams, WeightedPointSet, sequential_sum
from .seeding import ApproxSolution

logger = logging.getLogger(__name__)

# c_g in |G| <= c_g · z² · log2(k/ε) · log2(z/ε), each log floored at 1
GROUP_COUNT_CONSTANT = 6.0
THRESHOLD_SLACK = 1e-12
INNER_LEVEL = np.iinfo(np.int64).min


@dataclass(frozen=True, order=True)
class RingIndex:
    cluster: int
    level: int


@dataclass(frozen=True)
class RingPartition:
    k: int
    z: float
    eps: float
    labels: np.ndarray
    point_costs: np.ndarray
    weights: np.ndarray
    deltas: np.ndarray
    levels: np.ndarray
    inner_threshold: float
    outer_threshold: float
    rings: Dict[RingIndex, np.ndarray]
    inner: List[np.ndarray]
    outer: List[np.ndarray]
    ring_costs: Dict[RingIndex, float]
    outer_costs: np.ndarray

    @property
    def n(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class Group:
    kind: str
    level: Optional[int]
    bucket: int
    members: np.ndarray
    cost_to_astar: float
    touched_clusters: FrozenSet[int]
    mass: float

    @property
    def group_id(self) -> str:
        if self.kind == 'main':
            return f"main:{self.level}:{self.bucket}"
        return f"outer:{self.bucket}"

    @property
    def size(self) -> int:
        return int(self.members.shape[0])


@dataclass(frozen=True)
class GroupStructure:
    groups: List[Group]
    leftover: np.ndarray
    leftover_indices: List[np.ndarray]
    light_rings: List[RingIndex]
    light_outer: List[int]
    ring_partition: RingPartition
    bucket_floor: float

    def to_json(self) -> Dict:
        return {
            'groups': [
                {
                    'id': g.group_id,
                    'kind': g.kind,
                    'j': g.level,
                    'b': g.bucket,
                    'size': g.size,
                    'mass': g.mass,
                    'cost': g.cost_to_astar,
                    'clusters': sorted(g.touched_clusters),
                }
                for g in self.groups
            ],
            'leftover': self.leftover.tolist(),
            'light_rings': [[r.cluster, r.level] for r in self.light_rings],
            'light_outer': list(self.light_outer),
            'inner_threshold': self.ring_partition.inner_threshold,
            'outer_threshold': self.ring_partition.outer_threshold,
            'bucket_floor': self.bucket_floor,
        }


def ring_thresholds(params: ClusteringParams) -> Tuple[float, float]:
    z, eps = params.z, params.eps
    return z * math.log2(eps / z), 2.0 * z * math.log2(z / eps)


def bucket_floor(params: ClusteringParams) -> float:
    """Buckets b must satisfy bucket_floor < b <= 0."""
    z, eps, k = params.z, params.eps, params.k
    return z * math.log2(eps / (4.0 * z)) - math.log2(k)


def group_count_bound(params: ClusteringParams) -> float:
    z, eps, k = params.z, params.eps, params.k
    return (GROUP_COUNT_CONSTANT * z * z
            * max(1.0, math.log2(k / eps)) * max(1.0, math.log2(z / eps)))


def log2_bucket(value: np.ndarray, unit: np.ndarray) -> np.ndarray:
    """Integer j with 2^j·unit <= value < 2^(j+1)·unit, for value, unit > 0."""
    value = np.asarray(value, dtype=np.float64)
    unit = np.broadcast_to(np.asarray(unit, dtype=np.float64), value.shape)
    j = np.floor(np.log2(value / unit)).astype(np.int64)
    # floor(log2) can be off by one near powers of two
    too_high = np.ldexp(unit, j) > value
    j[too_high] -= 1
    too_low = np.ldexp(unit, j + 1) <= value
    j[too_low] += 1
    return j


def build_rings(P: WeightedPointSet, sol: ApproxSolution, params: ClusteringParams) -> RingPartition:
    k = sol.k
    labels = np.asarray(sol.labels, dtype=np.int64)
    costs = np.asarray(sol.point_costs, dtype=np.float64)
    deltas = np.asarray(sol.deltas, dtype=np.float64)
    inner_thr, outer_thr = ring_thresholds(params)

    levels = np.full(P.n, INNER_LEVEL, dtype=np.int64)
    point_deltas = deltas[labels] if P.n else np.zeros(0)
    positive = (point_deltas > 0) & (costs > 0)
    if np.any(positive):
        levels[positive] = log2_bucket(costs[positive], point_deltas[positive])

    is_inner = ~positive | (levels <= inner_thr - THRESHOLD_SLACK)
    is_outer = ~is_inner & (levels >= outer_thr + THRESHOLD_SLACK)
    is_main = ~is_inner & ~is_outer

    rings: Dict[RingIndex, np.ndarray] = {}
    ring_costs: Dict[RingIndex, float] = {}
    main_idx = np.flatnonzero(is_main)
    for cluster, level in sorted(set(zip(labels[main_idx].tolist(), levels[main_idx].tolist()))):
        members = main_idx[(labels[main_idx] == cluster) & (levels[main_idx] == level)]
        key = RingIndex(cluster, level)
        rings[key] = members
        ring_costs[key] = sequential_sum(P.weights[members] * costs[members])

    inner = [np.flatnonzero(is_inner & (labels == i)) for i in range(k)]
    outer = [np.flatnonzero(is_outer & (labels == i)) for i in range(k)]
    outer_costs = np.array([sequential_sum(P.weights[o] * costs[o]) for o in outer])

    logger.debug(f"Rings: {len(rings)} main, {int(is_inner.sum())} inner points, "
                 f"{int(is_outer.sum())} outer points")
    return RingPartition(
        k=k, z=params.z, eps=params.eps,
        labels=labels, point_costs=costs, weights=np.asarray(P.weights),
        deltas=deltas, levels=levels,
        inner_threshold=inner_thr, outer_threshold=outer_thr,
        rings=rings, inner=inner, outer=outer,
        ring_costs=ring_costs, outer_costs=outer_costs,
    )


def _make_group(rp: RingPartition, kind: str, level: Optional[int], bucket: int,
                member_lists: List[np.ndarray]) -> Group:
    members = np.sort(np.concatenate(member_lists))
    return Group(
        kind=kind,
        level=level,
        bucket=bucket,
        members=members,
        cost_to_astar=sequential_sum(rp.weights[members] * rp.point_costs[members]),
        touched_clusters=frozenset(int(c) for c in np.unique(rp.labels[members])),
        mass=sequential_sum(rp.weights[members]),
    )


def build_groups(rp: RingPartition, params: ClusteringParams) -> GroupStructure:
    floor_b = bucket_floor(params)
    groups: List[Group] = []
    light_rings: List[RingIndex] = []
    light_outer: List[int] = []

    for level in sorted({r.level for r in rp.rings}):
        level_rings = sorted(r for r in rp.rings if r.level == level)
        level_cost = sequential_sum(np.array([rp.ring_costs[r] for r in level_rings]))
        buckets: Dict[int, List[np.ndarray]] = {}
        for ring in level_rings:
            ring_cost = rp.ring_costs[ring]
            if not (ring_cost > 0 and level_cost > 0):
                light_rings.append(ring)
                continue
            b = int(log2_bucket(np.array([ring_cost]), np.array([level_cost]))[0])
            if b <= floor_b:
                light_rings.append(ring)
                continue
            buckets.setdefault(b, []).append(rp.rings[ring])
        for b in sorted(buckets):
            groups.append(_make_group(rp, 'main', level, b, buckets[b]))

    outer_total = sequential_sum(rp.outer_costs)
    outer_buckets: Dict[int, List[np.ndarray]] = {}
    for cluster, members in enumerate(rp.outer):
        if members.size == 0:
            continue
        cost = float(rp.outer_costs[cluster])
        if not (cost > 0 and outer_total > 0):
            light_outer.append(cluster)
            continue
        b = int(log2_bucket(np.array([cost]), np.array([outer_total]))[0])
        if b <= floor_b:
            light_outer.append(cluster)
            continue
        outer_buckets.setdefault(b, []).append(members)
    for b in sorted(outer_buckets):
        groups.append(_make_group(rp, 'outer', None, b, outer_buckets[b]))

    in_group = np.zeros(rp.n, dtype=bool)
    for group in groups:
        in_group[group.members] = True
    leftover_indices = [np.flatnonzero(~in_group & (rp.labels == i)) for i in range(rp.k)]
    leftover = np.array([sequential_sum(rp.weights[idx]) for idx in leftover_indices])

    bound = group_count_bound(params)
    if len(groups) > bound:
        logger.warning(f"Group count {len(groups)} exceeds documented bound {bound:.1f}")
    logger.info(f"Groups: {len(groups)} ({sum(g.kind == 'main' for g in groups)} main), "
                f"{len(light_rings)} light rings, leftover mass {sequential_sum(leftover):.6g}")
    return GroupStructure(
        groups=groups,
        leftover=leftover,
        leftover_indices=leftover_indices,
        light_rings=light_rings,
        light_outer=light_outer,
        ring_partition=rp,
        bucket_floor=floor_b,
    )


def decompose(P: WeightedPointSet, sol: ApproxSolution, params: ClusteringParams) -> GroupStructure:
    return build_groups(build_rings(P, sol, params), params)


def verify_structure(gs: GroupStructure, params: ClusteringParams, rtol: float = 1e-9) -> List[str]:
    """Re-check the ring and group invariants point by point; returns violations."""
    rp = gs.ring_partition
    violations: List[str] = []

    seen = np.zeros(rp.n, dtype=np.int64)
    for group in gs.groups:
        seen[group.members] += 1
    for idx in gs.leftover_indices:
        seen[idx] += 1
    for p in np.flatnonzero(seen != 1):
        violations.append(f"point {p} covered {seen[p]} times by groups/leftover")

    for ring, members in rp.rings.items():
        delta = rp.deltas[ring.cluster]
        lo, hi = math.ldexp(delta, ring.level), math.ldexp(delta, ring.level + 1)
        for p in members:
            c = rp.point_costs[p]
            if not (lo <= c < hi) or rp.labels[p] != ring.cluster:
                violations.append(f"point {p} violates ring ({ring.cluster}, {ring.level})")

    k = params.k
    for group in gs.groups:
        if group.kind != 'main':
            continue
        for cluster in group.touched_clusters:
            in_cluster = group.members[rp.labels[group.members] == cluster]
            cluster_mass = sequential_sum(rp.weights[in_cluster])
            cluster_cost = sequential_sum(rp.weights[in_cluster] * rp.point_costs[in_cluster])
            if group.cost_to_astar > 2 * k * cluster_cost * (1 + rtol):
                violations.append(f"{group.group_id}: cost exceeds 2k·cost(P_{cluster}∩G)")
            for p in in_cluster:
                if cluster_cost > 2 * cluster_mass * rp.point_costs[p] * (1 + rtol):
                    violations.append(f"{group.group_id}: point {p} breaks "
                                      f"cost(P_{cluster}∩G) ≤ 2·|P_{cluster}∩G|·d^z")
                bound = 4 * k * cluster_mass * rp.point_costs[p]
                if group.cost_to_astar > bound * (1 + rtol):
                    violations.append(f"{group.group_id}: point {p} breaks the main group cost bound")
    return violations
