import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CombinatorialGuardError, ConfigError
from .geometry import CenterSet, ClusteringParams, WeightedPointSet, cost_z
from .lowerbound import LbInstance, adversarial_center_set, missing_copy_center_set
from .rng import derive_rng
from .sampler import Coreset
from .seeding import ApproxSolution, dz_seed, local_search_refine

logger = logging.getLogger(__name__)

FAMILY_ORDER = ('random', 'perturbed', 'adversarial', 'explicit', 'exhaustive')
PERTURBATION_SCALES = (0.01, 0.1, 1.0, 10.0)
EXHAUSTIVE_GUARD = 10 ** 6


@dataclass
class FamilyConfig:
    random: int = 0
    perturbed: int = 0
    adversarial: bool = False
    explicit: List[CenterSet] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> 'FamilyConfig':
        """Parse 'random:1000,perturbed:100,adversarial'."""
        cfg = cls()
        for item in filter(None, (part.strip() for part in text.split(','))):
            name, _, count = item.partition(':')
            if name == 'adversarial':
                cfg.adversarial = True
                continue
            if name not in ('random', 'perturbed'):
                raise ConfigError(f"unknown center-set family {name!r}")
            try:
                value = int(count)
            except ValueError:
                raise ConfigError(f"family {name!r} needs an integer count, got {count!r}")
            if value < 0:
                raise ConfigError(f"family {name!r} count must be >= 0")
            setattr(cfg, name, value)
        return cfg

    def describe(self) -> str:
        parts = [f"random:{self.random}", f"perturbed:{self.perturbed}"]
        if self.adversarial:
            parts.append('adversarial')
        if self.explicit:
            parts.append(f"explicit:{len(self.explicit)}")
        return ','.join(parts)


@dataclass
class FamilyStats:
    count: int = 0
    max_rel_error: float = 0.0
    mean_rel_error: float = 0.0
    worst_index: int = -1


@dataclass
class DistortionReport:
    eps: float
    max_rel_error: float = 0.0
    num_center_sets: int = 0
    families: Dict[str, FamilyStats] = field(default_factory=dict)
    worst_family: Optional[str] = None
    worst_center_set: Optional[CenterSet] = None

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.eps

    def family_max(self, name: str) -> Optional[float]:
        stats = self.families.get(name)
        return stats.max_rel_error if stats else None


def _as_pointset(S: Union[Coreset, WeightedPointSet]) -> WeightedPointSet:
    return S.points if isinstance(S, Coreset) else S


def rel_error(P: WeightedPointSet, S: Union[Coreset, WeightedPointSet], C: CenterSet, z: float) -> float:
    """|cost_z(S, C) − cost_z(P, C)| / cost_z(P, C)."""
    true = cost_z(P, C, z)
    estimate = cost_z(_as_pointset(S), C, z)
    if true == 0:
        return 0.0 if estimate == 0 else math.inf
    return abs(estimate - true) / true


def _random_centers(P: WeightedPointSet, k: int, count: int, seed: int) -> List[CenterSet]:
    if count == 0 or P.n == 0:
        return []
    rng = derive_rng(seed, 'evaluator', 'random')
    lo, hi = P.points.min(axis=0), P.points.max(axis=0)
    return [CenterSet(rng.uniform(lo, hi, size=(k, P.dim))) for _ in range(count)]


def _perturbed_centers(P: WeightedPointSet, params: ClusteringParams, count: int, seed: int,
                       solution: Optional[ApproxSolution]) -> List[CenterSet]:
    if count == 0 or P.n < params.k:
        return []
    base = solution or dz_seed(P, params, seed)
    refined = local_search_refine(P, base, params, max_swaps=2, seed=seed)
    bases = [base.centers.centers, refined.centers.centers]
    avg_cost = base.total_cost / P.total_weight if P.total_weight > 0 else 0.0
    unit = avg_cost ** (1.0 / params.z)
    rng = derive_rng(seed, 'evaluator', 'perturbed')
    out = []
    for trial in range(count):
        center = bases[trial % 2]
        scale = PERTURBATION_SCALES[(trial // 2) % len(PERTURBATION_SCALES)] * unit
        out.append(CenterSet(center + rng.normal(0.0, 1.0, size=center.shape) * scale))
    return out


def _adversarial_centers(inst: LbInstance, support: Sequence[int]) -> List[CenterSet]:
    out = []
    for copy in range(inst.copies):
        out.append(adversarial_center_set(inst, support, copy).centers)
        out.append(missing_copy_center_set(inst, copy))
    return out


def _evaluate(P: WeightedPointSet, S: WeightedPointSet, center_sets: List[CenterSet], z: float,
              threads: int) -> List[float]:
    def one(C: CenterSet) -> float:
        return rel_error(P, S, C, z)

    if threads > 1 and len(center_sets) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, center_sets))
    return [one(C) for C in center_sets]


def _aggregate(report: DistortionReport, name: str, center_sets: List[CenterSet],
               errors: List[float]):
    if not center_sets:
        return
    stats = FamilyStats(count=len(errors))
    worst = int(np.argmax(errors))
    stats.max_rel_error = float(errors[worst])
    stats.mean_rel_error = float(np.mean(errors))
    stats.worst_index = worst
    report.families[name] = stats
    report.num_center_sets += len(errors)
    # strict comparison keeps the first maximum in enumeration order
    if report.worst_center_set is None or stats.max_rel_error > report.max_rel_error:
        report.max_rel_error = stats.max_rel_error
        report.worst_family = name
        report.worst_center_set = center_sets[worst]


def distortion_over_centers(P: WeightedPointSet, S: Union[Coreset, WeightedPointSet],
                            params: ClusteringParams, families: FamilyConfig, seed: int,
                            solution: Optional[ApproxSolution] = None,
                            lb_instance: Optional[LbInstance] = None,
                            lb_support: Optional[Sequence[int]] = None,
                            threads: int = 1) -> DistortionReport:
    S = _as_pointset(S)
    report = DistortionReport(eps=params.eps)
    generated = {
        'random': _random_centers(P, params.k, families.random, seed),
        'perturbed': _perturbed_centers(P, params, families.perturbed, seed, solution),
        'adversarial': [],
        'explicit': list(families.explicit),
    }
    if families.adversarial:
        if lb_instance is None:
            logger.warning("adversarial family requested but no lower-bound metadata given; skipped")
        else:
            generated['adversarial'] = _adversarial_centers(lb_instance, lb_support or [])

    for name in FAMILY_ORDER:
        center_sets = generated.get(name, [])
        _aggregate(report, name, center_sets, _evaluate(P, S, center_sets, params.z, threads))

    logger.info(f"Distortion: {report.num_center_sets} center sets, max rel error "
                f"{report.max_rel_error:.4g} ({report.worst_family})")
    return report


def exhaustive_distortion(P: WeightedPointSet, S: Union[Coreset, WeightedPointSet],
                          params: ClusteringParams, candidates: np.ndarray,
                          guard: int = EXHAUSTIVE_GUARD, threads: int = 1) -> DistortionReport:
    """Max rel_error over every k-subset of the candidate centers."""
    candidates = np.asarray(candidates, dtype=np.float64)
    total = math.comb(candidates.shape[0], params.k)
    if total > guard:
        raise CombinatorialGuardError(
            f"C({candidates.shape[0]}, {params.k}) = {total} center sets exceeds the guard {guard}")
    center_sets = [CenterSet(candidates[list(subset)])
                   for subset in combinations(range(candidates.shape[0]), params.k)]
    S = _as_pointset(S)
    report = DistortionReport(eps=params.eps)
    _aggregate(report, 'exhaustive', center_sets, _evaluate(P, S, center_sets, params.z, threads))
    logger.info(f"Exhaustive distortion over {total} center sets: {report.max_rel_error:.4g}")
    return report
