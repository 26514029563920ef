import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from .decomposition import Group, GroupStructure, RingPartition, decompose
from .errors import InvalidParameterError
from .geometry import ClusteringParams, WeightedPointSet
from .rng import derive_rng
from .seeding import ApproxSolution, dz_seed, local_search_refine

logger = logging.getLogger(__name__)

ASTAR_TAG = 'astar'


def gamma_exponent(z: float) -> float:
    return (2.0 * z + 2.0) / (z + 2.0)


def gamma_for_group(params: ClusteringParams, gamma_const: float) -> int:
    """Samples per group: c · k^((2z+2)/(z+2)) · ε^-2 · ln(k/ε) · ln^4(1/ε).

    Floored at c · k · ε^-2 · ln(k/ε) (and at 1).
    """
    if not gamma_const > 0:
        raise InvalidParameterError(f"gamma_const must be positive, got {gamma_const}")
    k, z, eps = params.k, params.z, params.eps
    log_term = math.log(k / eps)
    main = (gamma_const * k ** gamma_exponent(z) * eps ** -2
            * log_term * math.log(1.0 / eps) ** 4)
    floor = max(1, math.ceil(gamma_const * k * eps ** -2 * log_term))
    return max(floor, math.ceil(main))


@dataclass(frozen=True)
class GroupSample:
    group_id: str
    gamma: int
    indices: np.ndarray
    counts: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class Coreset:
    points: WeightedPointSet
    provenance: List[str]
    source_indices: np.ndarray
    gamma_used: Dict[str, int]
    gamma_nominal: int
    capped_groups: List[str]
    presize: int
    seed: int

    @property
    def size(self) -> int:
        return self.points.n

    @property
    def total_weight(self) -> float:
        return self.points.total_weight


def sample_group(group: Group, rp: RingPartition, gamma: int, seed: int) -> GroupSample:
    """Γ i.i.d. draws with probability ∝ w·d^z(p, A*); duplicates merged."""
    if gamma < 1:
        raise InvalidParameterError(f"gamma must be >= 1, got {gamma}")
    members = group.members
    dz = rp.point_costs[members]
    mass = rp.weights[members] * dz
    cumulative = np.cumsum(mass)
    total = float(cumulative[-1]) if cumulative.size else 0.0
    if not total > 0:
        raise InvalidParameterError(f"group {group.group_id} has zero cost to A*")

    rng = derive_rng(seed, 'sampler', group.group_id)
    draws = np.searchsorted(cumulative, rng.random(gamma) * total, side='right')
    np.minimum(draws, members.size - 1, out=draws)
    positions, counts = np.unique(draws, return_counts=True)

    cost = group.cost_to_astar
    weights = counts * (cost / (gamma * dz[positions]))
    return GroupSample(
        group_id=group.group_id,
        gamma=gamma,
        indices=members[positions],
        counts=counts.astype(np.int64),
        weights=weights,
    )


def build_coreset(P: WeightedPointSet, sol: ApproxSolution, gs: GroupStructure,
                  params: ClusteringParams, gamma_const: float, seed: int,
                  threads: int = 1) -> Coreset:
    """A* with residual weights, followed by the importance samples of every group."""
    nominal = gamma_for_group(params, gamma_const)
    rp = gs.ring_partition

    gamma_used: Dict[str, int] = {}
    capped: List[str] = []
    for group in gs.groups:
        gamma = nominal
        if gamma > group.size:
            gamma = group.size
            capped.append(group.group_id)
        gamma_used[group.group_id] = gamma
    if capped:
        logger.warning(f"Γ_G={nominal} capped at group size for {len(capped)} groups")

    def run(group: Group) -> GroupSample:
        return sample_group(group, rp, gamma_used[group.group_id], seed)

    if threads > 1 and len(gs.groups) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(run, gs.groups))
    else:
        samples = [run(group) for group in gs.groups]

    rows = [sol.centers.centers]
    weights = [gs.leftover]
    provenance = [f"{ASTAR_TAG}:{i}" for i in range(sol.k)]
    sources = [sol.center_indices]
    for sample in samples:
        rows.append(P.points[sample.indices])
        weights.append(sample.weights)
        provenance.extend(f"group:{sample.group_id}" for _ in range(sample.indices.size))
        sources.append(sample.indices)

    coreset = Coreset(
        points=WeightedPointSet(np.vstack(rows), np.concatenate(weights)),
        provenance=provenance,
        source_indices=np.concatenate(sources).astype(np.int64),
        gamma_used=gamma_used,
        gamma_nominal=nominal,
        capped_groups=capped,
        presize=sol.k + sum(gamma_used.values()),
        seed=seed,
    )
    logger.info(f"Coreset: {coreset.size} points ({coreset.presize} before merging), "
                f"{len(gs.groups)} groups, Γ={nominal}")
    return coreset


def sample_weights_by_cluster(coreset: Coreset, rp: RingPartition) -> np.ndarray:
    """Sampled weight landing in each cluster (A* rows excluded)."""
    out = np.zeros(rp.k)
    for tag, src, w in zip(coreset.provenance, coreset.source_indices, coreset.points.weights):
        if tag.startswith(ASTAR_TAG):
            continue
        out[rp.labels[src]] += w
    return out


@dataclass(frozen=True)
class CoresetRun:
    solution: ApproxSolution
    seeding_cost: float
    groups: GroupStructure
    coreset: Coreset


def construct_coreset(P: WeightedPointSet, params: ClusteringParams, gamma_const: float,
                      seed: int, local_search: int = 0, threads: int = 1) -> CoresetRun:
    """Seeding, optional local search, decomposition and sampling under one root seed."""
    seeded = dz_seed(P, params, seed)
    solution = local_search_refine(P, seeded, params, local_search, seed=seed)
    groups = decompose(P, solution, params)
    coreset = build_coreset(P, solution, groups, params, gamma_const, seed, threads=threads)
    return CoresetRun(solution=solution, seeding_cost=seeded.total_cost, groups=groups, coreset=coreset)
