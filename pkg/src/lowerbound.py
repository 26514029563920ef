import math
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .errors import InfeasibleParametersError, InvalidParameterError, RetryBudgetExceeded
from .geometry import CenterSet, WeightedPointSet, assign_clusters, cost_z, squared_distances
from .rng import derive_rng

logger = logging.getLogger(__name__)

COVERED_VALUE = 0.8
SUBSET_RETRIES = 1000
INTERSECTION_FRACTION = 0.1
SEPARATION_FACTOR = 1e4
REMOTE_FACTOR = 100.0


def covered_cost(t: float) -> float:
    return 1.82 * t * t - 3.4 * t + 3.0


def uncovered_cost(t: float) -> float:
    return 1.82 * t * t - 3.8 * t + 3.0


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SubsetFamily:
    ground_size: int
    subsets: List[np.ndarray]
    plus_half: List[np.ndarray]
    minus_half: List[np.ndarray]
    subset_size: int
    max_pair_intersection: int
    mode: str


def _max_pair_intersection(subsets: List[np.ndarray], ground_size: int) -> int:
    if len(subsets) < 2:
        return 0
    incidence = np.zeros((len(subsets), ground_size), dtype=np.int64)
    for i, subset in enumerate(subsets):
        incidence[i, subset] = 1
    overlap = incidence @ incidence.T
    np.fill_diagonal(overlap, 0)
    return int(overlap.max())


def build_subset_family(k: int, subset_size: int, ground_size: int, seed: int,
                        max_retries: int = SUBSET_RETRIES) -> SubsetFamily:
    """k/2 subsets of [B] whose pairwise intersections stay within 0.1·|B_i|."""
    if k < 2 or k % 2:
        raise InvalidParameterError(f"k must be a positive even integer, got {k}")
    if subset_size < 2 or subset_size % 2:
        raise InvalidParameterError(f"subset size must be a positive even integer, got {subset_size}")
    if ground_size < subset_size:
        raise InfeasibleParametersError(f"ground size {ground_size} < subset size {subset_size}")
    count = k // 2
    limit = int(math.floor(INTERSECTION_FRACTION * subset_size))

    if count * subset_size <= ground_size:
        mode = 'disjoint'
        subsets = [np.arange(i * subset_size, (i + 1) * subset_size) for i in range(count)]
    else:
        mode = 'sampled'
        rng = derive_rng(seed, 'lowerbound', 'family')
        subsets = []
        used = np.zeros((0, ground_size), dtype=np.int64)
        for i in range(count):
            for attempt in range(max_retries):
                candidate = np.sort(rng.choice(ground_size, size=subset_size, replace=False))
                row = np.zeros(ground_size, dtype=np.int64)
                row[candidate] = 1
                if used.shape[0] == 0 or int((used @ row).max()) <= limit:
                    break
            else:
                raise RetryBudgetExceeded(
                    f"subset {i}: no {subset_size}-set of [{ground_size}] with overlap <= {limit} "
                    f"after {max_retries} draws")
            subsets.append(candidate)
            used = np.vstack([used, row])

    max_overlap = _max_pair_intersection(subsets, ground_size)
    if max_overlap > limit:
        raise InfeasibleParametersError(f"family overlap {max_overlap} exceeds {limit}")
    half = subset_size // 2
    logger.debug(f"Subset family: {count} x {subset_size} over [{ground_size}], {mode}, overlap {max_overlap}")
    return SubsetFamily(
        ground_size=ground_size,
        subsets=subsets,
        plus_half=[s[:half] for s in subsets],
        minus_half=[s[half:] for s in subsets],
        subset_size=subset_size,
        max_pair_intersection=max_overlap,
        mode=mode,
    )


@dataclass(frozen=True)
class LbInstance:
    k: int
    z: float
    eps: float
    eps_requested: Optional[float]
    special_case: bool
    seed: int
    t: float
    subset_size: int
    ground_size: int
    family: SubsetFamily
    copies: int
    copy_separation: float
    far_center_distance: float
    points: WeightedPointSet
    point_tags: np.ndarray

    @property
    def dim(self) -> int:
        return self.copies * self.ground_size + 1

    def origin(self, copy: int) -> np.ndarray:
        o = np.zeros(self.dim)
        o[-1] = copy * self.copy_separation
        return o

    def copy_indices(self, copy: int) -> np.ndarray:
        return np.flatnonzero(self.point_tags[:, 0] == copy)

    def to_meta(self) -> Dict:
        return {
            'k': self.k,
            'z': self.z,
            'eps': self.eps,
            'eps_requested': self.eps_requested,
            'special_case': self.special_case,
            'seed': self.seed,
            't': self.t,
            'subset_size': self.subset_size,
            'B': self.ground_size,
            'copies': self.copies,
            'copy_separation': self.copy_separation,
            'far_center_distance': self.far_center_distance,
            'dim': self.dim,
            'family_mode': self.family.mode,
            'family': [s.tolist() for s in self.family.subsets],
            'plus_half': [s.tolist() for s in self.family.plus_half],
            'minus_half': [s.tolist() for s in self.family.minus_half],
            'max_pair_intersection': self.family.max_pair_intersection,
            'origins': [self.origin(l).tolist() for l in range(self.copies)],
            'point_tags': self.point_tags.tolist(),
        }

    @classmethod
    def from_meta(cls, meta: Dict) -> 'LbInstance':
        family = SubsetFamily(
            ground_size=int(meta['B']),
            subsets=[np.asarray(s, dtype=np.int64) for s in meta['family']],
            plus_half=[np.asarray(s, dtype=np.int64) for s in meta['plus_half']],
            minus_half=[np.asarray(s, dtype=np.int64) for s in meta['minus_half']],
            subset_size=int(meta['subset_size']),
            max_pair_intersection=int(meta['max_pair_intersection']),
            mode=meta['family_mode'],
        )
        return _assemble(
            k=int(meta['k']), z=float(meta['z']), eps=float(meta['eps']),
            eps_requested=meta.get('eps_requested'), special_case=bool(meta['special_case']),
            seed=int(meta['seed']), t=float(meta['t']), family=family,
            copies=int(meta['copies']), copy_separation=float(meta['copy_separation']),
            far_center_distance=float(meta['far_center_distance']),
        )


def _assemble(k, z, eps, eps_requested, special_case, seed, t, family, copies,
              copy_separation, far_center_distance) -> LbInstance:
    B = family.ground_size
    dim = copies * B + 1
    rows, tags = [], []
    for l in range(copies):
        offset = l * B
        for i, plus in enumerate(family.plus_half):
            minus = family.minus_half[i]
            for j in plus:
                p = np.zeros(dim)
                p[offset + plus] += 1.0 / t
                p[offset + minus] -= 1.0 / t
                p[offset + j] += t
                p[-1] = l * copy_separation
                rows.append(p)
                tags.append((l, i, int(j)))
    return LbInstance(
        k=k, z=z, eps=eps, eps_requested=eps_requested, special_case=special_case, seed=seed,
        t=t, subset_size=family.subset_size, ground_size=B, family=family, copies=copies,
        copy_separation=copy_separation, far_center_distance=far_center_distance,
        points=WeightedPointSet.unweighted(np.array(rows), dim),
        point_tags=np.array(tags, dtype=np.int64).reshape(-1, 3),
    )


def build_instance(k: int, z: float = 2.0, eps: Optional[float] = None, seed: int = 0,
                   copy_separation: Optional[float] = None,
                   ground_size: Optional[int] = None) -> LbInstance:
    """Hard instance: copies of k/2 clusters built on a near-disjoint subset family.

    eps=None is the k^{1/4} special case; otherwise t = 1/eps and B = 100k/t^z.
    """
    if k < 2 or k % 2:
        raise InvalidParameterError(f"k must be a positive even integer, got {k}")
    if not z >= 1:
        raise InvalidParameterError(f"z must be >= 1, got {z}")
    special = eps is None
    if special:
        t_raw = k ** 0.25
        B = _round_half_up(100.0 * math.sqrt(k))
    else:
        if not 0 < eps < 1:
            raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")
        t_raw = 1.0 / eps
        B = _round_half_up(100.0 * k / t_raw ** z)
    subset_size = max(2, 2 * _round_half_up(t_raw * t_raw / 2.0))
    t = math.sqrt(subset_size)
    eps_eff = 0.01 * k ** -0.25 if special else 1.0 / t
    if ground_size is not None:
        B = int(ground_size)
    if B < subset_size:
        raise InfeasibleParametersError(
            f"ground size B={B} is smaller than the subset size {subset_size}; pass a larger ground_size")

    family = build_subset_family(k, subset_size, B, seed)
    copies = max(1, _round_half_up(k / (2.0 * B)))
    separation = copy_separation or SEPARATION_FACTOR * k * t / eps_eff
    far = 10.0 * separation * copies
    inst = _assemble(k, float(z), eps_eff, eps, special, seed, t, family, copies, separation, far)
    logger.info(f"Lower-bound instance: k={k}, t={t:.4g}, B={B}, copies={copies}, "
                f"{inst.points.n} points in dimension {inst.dim}")
    return inst


@dataclass(frozen=True)
class AdversarialCenters:
    centers: CenterSet
    target_copy: int
    Ti_sets: List[List[int]]
    far_center_distance: float
    in_copy_slots: np.ndarray


def _checked_support(inst: LbInstance, support: Iterable[int]) -> List[int]:
    support = [int(s) for s in support]
    for s in support:
        if not 0 <= s < inst.points.n:
            raise InvalidParameterError(f"support index {s} is outside the instance (n={inst.points.n})")
    return support


def _support_by_subset(inst: LbInstance, support: Iterable[int], copy: int) -> List[List[int]]:
    covered: List[set] = [set() for _ in range(inst.k // 2)]
    for idx in _checked_support(inst, support):
        l, i, j = inst.point_tags[idx]
        if l == copy:
            covered[i].add(int(j))
    return [sorted(c) for c in covered]


def _check_copy(inst: LbInstance, copy: int):
    if not 0 <= copy < inst.copies:
        raise InvalidParameterError(f"copy {copy} out of range [0, {inst.copies})")


def _far_center(inst: LbInstance) -> np.ndarray:
    c = np.zeros(inst.dim)
    c[-1] = -inst.far_center_distance
    return c


def adversarial_center_set(inst: LbInstance, support: Iterable[int], copy: int) -> AdversarialCenters:
    _check_copy(inst, copy)
    T = _support_by_subset(inst, support, copy)
    B, t = inst.ground_size, inst.t
    origin = inst.origin(copy)

    centers = []
    for i, plus in enumerate(inst.family.plus_half):
        minus = inst.family.minus_half[i]
        covered = set(T[i])
        c = origin.copy()
        offset = copy * B
        uncovered = 0
        for j in plus:
            if int(j) in covered:
                c[offset + j] = COVERED_VALUE
            else:
                c[offset + j] = 1.0
                uncovered += 1
        for rank, j in enumerate(np.sort(minus)):
            c[offset + j] = -COVERED_VALUE if rank < uncovered else -1.0
        centers.append(c)

    for other in range(inst.copies):
        if other == copy:
            continue
        base = inst.origin(other)
        for j in range(B):
            c = base.copy()
            c[other * B + j] = t
            centers.append(c)

    fillers = inst.k - len(centers)
    if fillers < 0:
        raise InfeasibleParametersError(f"{len(centers)} centers needed but k={inst.k}")
    centers.extend(_far_center(inst) for _ in range(fillers))
    assert len(centers) == inst.k
    return AdversarialCenters(
        centers=CenterSet(np.array(centers)),
        target_copy=copy,
        Ti_sets=T,
        far_center_distance=inst.far_center_distance,
        in_copy_slots=np.arange(inst.k // 2),
    )


def missing_copy_center_set(inst: LbInstance, copy: int) -> CenterSet:
    """Scaled basis centers in every copy but `copy`; the rest at one remote point."""
    _check_copy(inst, copy)
    centers = []
    for other in range(inst.copies):
        if other == copy:
            continue
        base = inst.origin(other)
        for j in range(inst.ground_size):
            c = base.copy()
            c[other * inst.ground_size + j] = inst.t
            centers.append(c)
    remote = inst.origin(copy)
    remote[-1] -= REMOTE_FACTOR * inst.k * inst.t / inst.eps
    centers.extend(remote for _ in range(inst.k - len(centers)))
    return CenterSet(np.array(centers[:inst.k]))


@dataclass
class ClaimReport:
    target_copy: int
    t: float
    checked_points: int = 0
    covered_points: int = 0
    covered_cost: float = 0.0
    uncovered_cost: float = 0.0
    gap: float = 0.0
    measured_gap: Optional[float] = None
    max_cross_inner_product: float = 0.0
    target_copy_cost: float = 0.0
    predicted_excess: float = 0.0
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)


def check_instance(inst: LbInstance, rtol: float = 1e-9) -> List[str]:
    """Exhaustive scan of the per-point norm identities and copy separation."""
    violations = []
    t, B = inst.t, inst.ground_size
    expected = t * t + 3.0
    for idx in range(inst.points.n):
        l, i, j = inst.point_tags[idx]
        diff = inst.points.points[idx] - inst.origin(l)
        norm_sq = float(diff @ diff)
        if not _close(norm_sq, expected, rtol):
            violations.append(f"point {idx}: ‖p − o_l‖² = {norm_sq!r}, expected {expected!r}")
        diff[l * B + j] -= t
        basis_sq = float(diff @ diff)
        if not _close(basis_sq, 1.0, rtol):
            violations.append(f"point {idx}: ‖p − o_l − t·e_j‖² = {basis_sq!r}, expected 1")
    for l in range(inst.copies - 1):
        a = inst.points.points[inst.copy_indices(l)]
        b = inst.points.points[inst.copy_indices(l + 1)]
        gap = float(np.sqrt(squared_distances(a, b).min()))
        if gap < inst.copy_separation * (1 - rtol):
            violations.append(f"copies {l} and {l + 1} only {gap:.6g} apart")
    return violations


def verify_claims(inst: LbInstance, support: Iterable[int], adv: AdversarialCenters,
                  support_weights: Optional[Sequence[float]] = None,
                  rtol: float = 1e-9) -> ClaimReport:
    """Check nearest-center identity, closed-form costs and the 0.4t gap on the target copy."""
    support = _checked_support(inst, support)
    weights = (np.ones(len(support)) if support_weights is None
               else np.asarray(support_weights, dtype=np.float64))
    if weights.shape[0] != len(support):
        raise InvalidParameterError("support weights must match the support indices")

    copy, t, B = adv.target_copy, inst.t, inst.ground_size
    report = ClaimReport(target_copy=copy, t=t,
                         covered_cost=covered_cost(t), uncovered_cost=uncovered_cost(t),
                         gap=covered_cost(t) - uncovered_cost(t))
    origin = inst.origin(copy)
    centers = adv.centers.centers
    in_copy = centers[:inst.k // 2] - origin

    for i, c in enumerate(in_copy):
        norm_sq = float(c @ c)
        if not _close(norm_sq, 0.82 * t * t, rtol):
            report.violations.append(f"center {i}: ‖c_i − o_l‖² = {norm_sq!r}, expected {0.82 * t * t!r}")

    idx = inst.copy_indices(copy)
    subset_points = WeightedPointSet.unweighted(inst.points.points[idx], inst.dim)
    sq = squared_distances(subset_points.points, centers)
    nearest = assign_clusters(subset_points, adv.centers)
    inner = (subset_points.points - origin) @ in_copy.T
    covered_sets = [set(T) for T in adv.Ti_sets]
    z = inst.z

    covered_values, uncovered_values = [], []
    for row, point in enumerate(idx):
        _, i, j = inst.point_tags[point]
        own = sq[row, i]
        if sq[row].min() < own or nearest[row] != i:
            report.violations.append(f"point {point}: nearest center is {nearest[row]}, not c_{i}")
        others = np.delete(inner[row], i)
        if others.size:
            report.max_cross_inner_product = max(report.max_cross_inner_product, float(others.max()))
            if others.max() > 1.1 * t * (1 + rtol):
                report.violations.append(f"point {point}: ⟨p, c_i'⟩ = {others.max():.6g} > 1.1t")
        is_covered = j in covered_sets[i]
        expected = covered_cost(t) if is_covered else uncovered_cost(t)
        if not _close(float(own), expected, rtol):
            branch = 'covered' if is_covered else 'uncovered'
            report.violations.append(f"point {point}: d² = {own!r}, {branch} closed form {expected!r}")
        if z != 2.0 and not _close(float(own) ** (z / 2.0), expected ** (z / 2.0), rtol):
            report.violations.append(f"point {point}: d^z disagrees with closed form^(z/2)")
        (covered_values if is_covered else uncovered_values).append(float(own))

    report.checked_points = int(idx.size)
    report.covered_points = len(covered_values)
    if covered_values and uncovered_values:
        report.measured_gap = float(np.mean(covered_values) - np.mean(uncovered_values))
        if not _close(report.measured_gap, report.gap, rtol):
            report.violations.append(f"measured gap {report.measured_gap!r} differs from 0.4t = {report.gap!r}")
    report.target_copy_cost = float(np.cumsum(sq[np.arange(idx.size), nearest])[-1]) if idx.size else 0.0

    in_target = [w for s, w in zip(support, weights) if inst.point_tags[s][0] == copy]
    n_support = len(in_target)
    weight_support = float(np.sum(in_target)) if in_target else 0.0
    report.predicted_excess = ((weight_support - n_support) * covered_cost(t)
                               - (idx.size - n_support) * uncovered_cost(t))
    logger.info(f"Claims on copy {copy}: {report.checked_points} points, "
                f"{len(report.violations)} violations, gap {report.gap:.6g}")
    return report


@dataclass(frozen=True)
class WeightProbe:
    copy: int
    rel_error: float
    copy_weight: float
    copy_size: int
    within_band: bool


def weight_probe(inst: LbInstance, support: Sequence[int], weights: Sequence[float],
                 copy: int) -> WeightProbe:
    """Cost check under the missing-copy centers plus the copy-l weight band (1 ± 2ε)|X_l|."""
    support = np.asarray(_checked_support(inst, support), dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    candidate = WeightedPointSet(inst.points.points[support], weights)
    centers = missing_copy_center_set(inst, copy)
    true = cost_z(inst.points, centers, inst.z)
    estimate = cost_z(candidate, centers, inst.z)
    in_copy = inst.point_tags[support, 0] == copy if support.size else np.zeros(0, dtype=bool)
    copy_weight = float(np.sum(weights[in_copy]))
    size = int(inst.copy_indices(copy).size)
    return WeightProbe(
        copy=copy,
        rel_error=abs(estimate - true) / true if true > 0 else (0.0 if estimate == 0 else math.inf),
        copy_weight=copy_weight,
        copy_size=size,
        within_band=abs(copy_weight - size) <= 2 * inst.eps * size,
    )


def default_target_copy(inst: LbInstance, support: Iterable[int]) -> int:
    counts = np.zeros(inst.copies, dtype=np.int64)
    for s in _checked_support(inst, support):
        counts[inst.point_tags[s][0]] += 1
    return int(np.argmin(counts))
