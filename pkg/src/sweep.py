import time
import logging
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional

import pandas as pd

from .datasets import check_params, generate
from .errors import ConfigError
from .evaluator import FamilyConfig, distortion_over_centers
from .geometry import ClusteringParams, WeightedPointSet
from .pointset_io import parse_pointset
from .rng import derive_seed
from .sampler import construct_coreset

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    'k', 'z', 'eps', 'gamma_const', 'seed', 'n', 'coreset_size', 'presize', 'num_groups',
    'max_rel_error', 'max_rel_error_random', 'max_rel_error_perturbed',
    'max_rel_error_adversarial', 'pass', 'runtime_ms', 'error',
]

DATASET_KEYS = {'file', 'generator', 'params'}


@dataclass
class ExperimentConfig:
    dataset: Dict[str, Any]
    k_grid: List[int]
    eps_grid: List[float]
    gamma_const_grid: List[float]
    seed_grid: List[int]
    z: float = 2.0
    families: str = 'random:100,perturbed:20'
    local_search: int = 0
    threads: int = 1
    reproducible: bool = False
    output: Optional[str] = None

    def __post_init__(self):
        for name in ('k_grid', 'eps_grid', 'gamma_const_grid', 'seed_grid'):
            grid = getattr(self, name)
            if not isinstance(grid, list) or not grid:
                raise ConfigError(f"{name} must be a non-empty list")
        if any(not isinstance(s, int) or isinstance(s, bool) or s < 0 for s in self.seed_grid):
            raise ConfigError("seed_grid must hold explicit non-negative integers")
        if not isinstance(self.dataset, dict) or ('file' in self.dataset) == ('generator' in self.dataset):
            raise ConfigError("dataset needs exactly one of 'file' or 'generator'")
        unknown = sorted(set(self.dataset) - DATASET_KEYS)
        if unknown:
            raise ConfigError(f"unknown dataset keys: {', '.join(unknown)}")
        if 'generator' in self.dataset:
            check_params(self.dataset['generator'], self.dataset.get('params', {}))
        FamilyConfig.parse(self.families)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> 'ExperimentConfig':
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**raw)
        except TypeError as e:
            raise ConfigError(str(e))


class DatasetCache:
    """Loads file datasets once; generator datasets are rebuilt per cell seed."""

    def __init__(self, source: Dict[str, Any]):
        self.source = source
        self._file: Optional[WeightedPointSet] = None

    def get(self, k: int, z: float, eps: float, seed: int) -> WeightedPointSet:
        if 'file' in self.source:
            if self._file is None:
                self._file = parse_pointset(self.source['file'])
            return self._file
        params = self.source.get('params', {})
        return generate(self.source['generator'], params, derive_seed(seed, 'dataset'), k=k, z=z, eps=eps)


def _run_cell(cfg: ExperimentConfig, data: DatasetCache, k: int, eps: float,
              gamma_const: float, seed: int) -> Dict[str, Any]:
    row: Dict[str, Any] = {col: None for col in CSV_COLUMNS}
    row.update(k=k, z=cfg.z, eps=eps, gamma_const=gamma_const, seed=seed, error='')
    start = time.perf_counter()
    try:
        params = ClusteringParams(k=k, z=cfg.z, eps=eps)
        P = data.get(k, cfg.z, eps, seed)
        run = construct_coreset(P, params, gamma_const, seed, local_search=cfg.local_search)
        report = distortion_over_centers(P, run.coreset, params, FamilyConfig.parse(cfg.families),
                                         seed, solution=run.solution)
        row.update(
            n=P.n,
            coreset_size=run.coreset.size,
            presize=run.coreset.presize,
            num_groups=len(run.groups.groups),
            max_rel_error=report.max_rel_error,
            max_rel_error_random=report.family_max('random'),
            max_rel_error_perturbed=report.family_max('perturbed'),
            max_rel_error_adversarial=report.family_max('adversarial'),
            **{'pass': report.passed},
        )
    except Exception as e:
        logger.error(f"Sweep cell k={k} eps={eps} gamma_const={gamma_const} seed={seed} failed: {e}")
        row['error'] = f"{type(e).__name__}: {e}"
    if not cfg.reproducible:
        row['runtime_ms'] = round((time.perf_counter() - start) * 1000.0, 3)
    return row


def run_sweep(cfg: ExperimentConfig) -> pd.DataFrame:
    """One row per (k, eps, gamma_const, seed) cell, in grid order."""
    cells = list(itertools.product(cfg.k_grid, cfg.eps_grid, cfg.gamma_const_grid, cfg.seed_grid))
    data = DatasetCache(cfg.dataset)
    logger.info(f"Sweep: {len(cells)} cells on {max(1, cfg.threads)} threads")

    def work(cell) -> Dict[str, Any]:
        return _run_cell(cfg, data, *cell)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(work, cells))
    else:
        rows = [work(cell) for cell in cells]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_rows(df: pd.DataFrame, path: str):
    df.to_csv(path, index=False, float_format='%.17g')
    logger.info(f"Wrote {len(df)} sweep rows to {path}")
