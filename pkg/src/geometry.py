import math
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[float], Sequence[Sequence[float]]]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


def as_point(coords: ArrayLike) -> np.ndarray:
    """A point is a finite 1-D float64 vector."""
    point = np.asarray(coords, dtype=np.float64)
    if point.ndim != 1:
        raise DimensionMismatchError(f"a point must be 1-D, got shape {point.shape}")
    if not np.all(np.isfinite(point)):
        raise InvalidParameterError("point coordinates must be finite")
    return point


@dataclass(frozen=True)
class WeightedPointSet:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim == 1 and points.size == 0:
            points = points.reshape(0, 0)
        if points.ndim != 2:
            raise DimensionMismatchError(f"points must be an (n, d) array, got shape {points.shape}")
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if weights.shape[0] != points.shape[0]:
            raise DimensionMismatchError(
                f"{points.shape[0]} points but {weights.shape[0]} weights")
        if not np.all(np.isfinite(points)):
            raise InvalidParameterError("point coordinates must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidParameterError("weights must be finite and non-negative")
        object.__setattr__(self, 'points', _frozen(points))
        object.__setattr__(self, 'weights', _frozen(weights))

    @classmethod
    def unweighted(cls, points: ArrayLike, dim: Optional[int] = None) -> 'WeightedPointSet':
        array = np.asarray(points, dtype=np.float64)
        if array.size == 0:
            array = array.reshape(0, dim or 0)
        return cls(array, np.ones(array.shape[0]))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return float(np.cumsum(self.weights)[-1]) if self.n else 0.0

    def subset(self, indices: Sequence[int]) -> 'WeightedPointSet':
        idx = np.asarray(indices, dtype=np.int64)
        return WeightedPointSet(self.points[idx], self.weights[idx])

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class CenterSet:
    centers: np.ndarray

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim == 1:
            centers = centers.reshape(1, -1)
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise InvalidParameterError("a center set needs at least one center")
        if not np.all(np.isfinite(centers)):
            raise InvalidParameterError("center coordinates must be finite")
        object.__setattr__(self, 'centers', _frozen(centers))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return self.k


@dataclass(frozen=True)
class ClusteringParams:
    k: int
    z: float = 2.0
    eps: float = 0.3

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidParameterError(f"k must be a positive integer, got {self.k}")
        if not self.z >= 1:
            raise InvalidParameterError(f"z must be >= 1, got {self.z}")
        if not 0 < self.eps < 1:
            raise InvalidParameterError(f"eps must lie in (0, 1), got {self.eps}")
        object.__setattr__(self, 'k', int(self.k))
        object.__setattr__(self, 'z', float(self.z))
        object.__setattr__(self, 'eps', float(self.eps))


def _squared_norm_rows(diff: np.ndarray) -> np.ndarray:
    # left-to-right over coordinates, so a scalar loop reproduces it bit for bit
    if diff.shape[-1] == 0:
        return np.zeros(diff.shape[:-1])
    return np.cumsum(diff * diff, axis=-1)[..., -1]


def sequential_sum(values: np.ndarray, compensated: bool = False) -> float:
    """Sum in stored order; `compensated` switches to math.fsum."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if values.size == 0:
        return 0.0
    if compensated:
        return math.fsum(values.tolist())
    return float(np.cumsum(values)[-1])


def dist(p: ArrayLike, q: ArrayLike) -> float:
    p, q = as_point(p), as_point(q)
    if p.shape != q.shape:
        raise DimensionMismatchError(f"dimension {p.shape[0]} vs {q.shape[0]}")
    return float(np.sqrt(_squared_norm_rows(p - q)))


def power_of_squared(sq: np.ndarray, z: float) -> np.ndarray:
    """d^z from squared distances: exact for z = 2."""
    if z == 2.0:
        return sq
    if z == 1.0:
        return np.sqrt(sq)
    return np.power(sq, z / 2.0)


def squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """(n, k) matrix of squared distances, built one center at a time."""
    points = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if points.ndim != 2 or centers.ndim != 2:
        raise DimensionMismatchError("points and centers must be 2-D arrays")
    if points.shape[1] != centers.shape[1]:
        raise DimensionMismatchError(
            f"points have dimension {points.shape[1]}, centers {centers.shape[1]}")
    out = np.empty((points.shape[0], centers.shape[0]))
    for j in range(centers.shape[0]):
        out[:, j] = _squared_norm_rows(points - centers[j])
    return out


def _center_array(C: Union[CenterSet, np.ndarray]) -> np.ndarray:
    array = C.centers if isinstance(C, CenterSet) else np.asarray(C, dtype=np.float64)
    if array.ndim != 2 or array.shape[0] == 0:
        raise InvalidParameterError("center set is empty")
    return array


def nearest_costs(P: WeightedPointSet, C: Union[CenterSet, np.ndarray], z: float):
    """Per-point d^z(x, C) (unweighted) and the index of the nearest center."""
    centers = _center_array(C)
    sq = squared_distances(P.points, centers)
    if P.n == 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    labels = np.argmin(sq, axis=1)
    nearest = sq[np.arange(P.n), labels]
    return power_of_squared(nearest, z), labels


def cost_z(P: WeightedPointSet, C: Union[CenterSet, np.ndarray], z: float,
           compensated: bool = False) -> float:
    """Σ_x w(x) · min_c d(x, c)^z."""
    if z < 1:
        raise InvalidParameterError(f"z must be >= 1, got {z}")
    costs, _ = nearest_costs(P, C, z)
    return sequential_sum(P.weights * costs, compensated=compensated)


def assign_clusters(P: WeightedPointSet, A: Union[CenterSet, np.ndarray]) -> np.ndarray:
    """Index of the nearest center per point; ties go to the lowest index."""
    centers = _center_array(A)
    if P.n == 0:
        return np.zeros(0, dtype=np.int64)
    # argmin returns the first minimum
    return np.argmin(squared_distances(P.points, centers), axis=1).astype(np.int64)
