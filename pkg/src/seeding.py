import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError
from .geometry import (
    CenterSet,
    ClusteringParams,
    WeightedPointSet,
    nearest_costs,
    power_of_squared,
    sequential_sum,
    squared_distances,
)
from .rng import derive_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ApproxSolution:
    centers: CenterSet
    center_indices: np.ndarray
    labels: np.ndarray
    point_costs: np.ndarray
    cluster_sizes: np.ndarray
    deltas: np.ndarray
    total_cost: float

    @property
    def k(self) -> int:
        return self.centers.k


def solution_from_centers(P: WeightedPointSet, center_indices: np.ndarray,
                          z: float) -> ApproxSolution:
    """Assign P to the given data points and fill in |P_i|, Δ_i and the cost."""
    center_indices = np.asarray(center_indices, dtype=np.int64)
    centers = CenterSet(P.points[center_indices])
    costs, labels = nearest_costs(P, centers, z)
    k = centers.k
    sizes = np.zeros(k)
    cluster_costs = np.zeros(k)
    for i in range(k):
        members = labels == i
        sizes[i] = sequential_sum(P.weights[members])
        cluster_costs[i] = sequential_sum(P.weights[members] * costs[members])
    deltas = np.divide(cluster_costs, sizes, out=np.zeros(k), where=sizes > 0)
    return ApproxSolution(
        centers=centers,
        center_indices=center_indices,
        labels=labels,
        point_costs=costs,
        cluster_sizes=sizes,
        deltas=deltas,
        total_cost=sequential_sum(P.weights * costs),
    )


def _draw_index(rng: np.random.Generator, mass: np.ndarray) -> Optional[int]:
    cumulative = np.cumsum(mass)
    total = cumulative[-1] if cumulative.size else 0.0
    if not total > 0:
        return None
    index = int(np.searchsorted(cumulative, rng.random() * total, side='right'))
    # numerical imprecision can land one past the end
    return min(index, mass.size - 1)


def dz_seed(P: WeightedPointSet, params: ClusteringParams, seed: int) -> ApproxSolution:
    """D^z sampling: each new center is a data point drawn proportionally to w·d^z."""
    n, k = P.n, params.k
    if n < k:
        raise InvalidParameterError(f"need at least k={k} points, got {n}")
    rng = derive_rng(seed, 'seeding', 'dz')

    indices = np.full(k, -1, dtype=np.int64)
    first = _draw_index(rng, P.weights)
    indices[0] = first if first is not None else int(rng.integers(n))
    closest_sq = squared_distances(P.points, P.points[indices[0]][None, :])[:, 0]

    duplicates = 0
    for c in range(1, k):
        mass = P.weights * power_of_squared(closest_sq, params.z)
        chosen = _draw_index(rng, mass)
        if chosen is None:
            # every point already sits on a center
            duplicates += 1
            chosen = _draw_index(rng, P.weights)
            if chosen is None:
                chosen = int(rng.integers(n))
        indices[c] = chosen
        new_sq = squared_distances(P.points, P.points[chosen][None, :])[:, 0]
        np.minimum(closest_sq, new_sq, out=closest_sq)

    if duplicates:
        logger.warning(f"D^z seeding placed {duplicates} duplicate centers (too few distinct points)")
    solution = solution_from_centers(P, indices, params.z)
    logger.info(f"D^z seeding: k={k}, z={params.z}, seed={seed}, cost={solution.total_cost:.6g}")
    return solution


def local_search_refine(P: WeightedPointSet, sol: ApproxSolution, params: ClusteringParams,
                        max_swaps: int, seed: int = 0, n_candidates: int = 16,
                        max_passes: int = 100) -> ApproxSolution:
    """Single-swap hill climbing over data points drawn by D^z sampling.

    Each pass draws fresh candidates from the current solution's cost
    distribution and, per candidate, applies the best strictly improving swap.
    Stops after `max_swaps` consecutive passes without an improvement.
    """
    if max_swaps <= 0 or P.n == 0:
        return sol
    rng = derive_rng(seed, 'seeding', 'local-search')
    z = params.z
    indices = sol.center_indices.copy()
    dz = power_of_squared(squared_distances(P.points, P.points[indices]), z)
    current = sequential_sum(P.weights * dz.min(axis=1))
    start_cost = current

    idle_passes = 0
    passes = 0
    while idle_passes < max_swaps and passes < max_passes:
        passes += 1
        improved = False
        mass = P.weights * dz.min(axis=1)
        for _ in range(n_candidates):
            candidate = _draw_index(rng, mass)
            if candidate is None:
                break
            cand_dz = power_of_squared(
                squared_distances(P.points, P.points[candidate][None, :])[:, 0], z)
            best_cost, best_slot = current, -1
            for slot in range(indices.size):
                others = np.delete(dz, slot, axis=1)
                reduced = others.min(axis=1) if others.shape[1] else np.full(P.n, np.inf)
                trial = sequential_sum(P.weights * np.minimum(reduced, cand_dz))
                if trial < best_cost:
                    best_cost, best_slot = trial, slot
            if best_slot >= 0:
                indices[best_slot] = candidate
                dz[:, best_slot] = cand_dz
                current = best_cost
                mass = P.weights * dz.min(axis=1)
                improved = True
        idle_passes = 0 if improved else idle_passes + 1
        logger.debug(f"local search pass {passes}: cost={current:.6g}")

    if np.array_equal(indices, sol.center_indices):
        return sol
    refined = solution_from_centers(P, indices, z)
    if refined.total_cost > sol.total_cost:
        return sol
    logger.info(f"Local search: {passes} passes, cost {start_cost:.6g} -> {refined.total_cost:.6g}")
    return refined
