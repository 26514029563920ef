import math
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError, RetryBudgetExceeded
from .geometry import as_point, squared_distances
from .rng import derive_rng

logger = logging.getLogger(__name__)

DEFAULT_CM = 4.0
MAX_RETRIES = 50
ITERATIONS_PER_ANCHOR = 500
MODES = ('terminal', 'additive')


def target_dimension(n_anchors: int, alpha: float, c_m: float = DEFAULT_CM) -> int:
    if n_anchors <= 1:
        return 2
    return max(2, math.ceil(c_m * alpha ** -2 * math.log(n_anchors)) + 1)


@dataclass(frozen=True)
class JlMap:
    matrix: np.ndarray
    source_dim: int
    target_dim: int
    alpha: float

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if points.shape[-1] != self.source_dim:
            raise DimensionMismatchError(
                f"expected dimension {self.source_dim}, got {points.shape[-1]}")
        return points @ self.matrix.T


@dataclass(frozen=True)
class TerminalEmbedding:
    jl: JlMap
    anchors: np.ndarray
    anchor_images: np.ndarray
    mode: str
    radius: float
    c_m: float
    retries: int
    anchor_distortion: float
    iteration_budget: int

    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]

    @property
    def target_dim(self) -> int:
        return self.jl.target_dim


@dataclass(frozen=True)
class QueryImage:
    image: np.ndarray
    branch: str
    residual: float
    bound: float
    iterations: int

    @property
    def certified(self) -> bool:
        return self.residual <= self.bound


@dataclass
class EmbeddingReport:
    num_queries: int = 0
    num_anchors: int = 0
    max_additive_error: float = 0.0
    max_multiplicative_error: float = 0.0
    per_query_additive: List[float] = field(default_factory=list)
    additive_bound: Optional[float] = None
    fraction_within_bound: float = 1.0
    certificate_failures: int = 0
    branches: List[str] = field(default_factory=list)


def _pairwise_distortion(points: np.ndarray, images: np.ndarray) -> float:
    """max over distinct pairs of max(ratio, 1/ratio) for image vs source distances."""
    if points.shape[0] < 2:
        return 1.0
    src = squared_distances(points, points)
    dst = squared_distances(images, images)
    upper = np.triu_indices(points.shape[0], k=1)
    src, dst = src[upper], dst[upper]
    keep = src > 0
    if not np.any(keep):
        return 1.0
    if np.any(dst[keep] == 0):
        return math.inf
    ratio = np.sqrt(dst[keep] / src[keep])
    return float(max(ratio.max(), 1.0 / ratio.min()))


def make_embedding(X: np.ndarray, alpha: float, mode: str = 'additive', seed: int = 0,
                   c_m: float = DEFAULT_CM, max_retries: int = MAX_RETRIES,
                   iteration_budget: Optional[int] = None) -> TerminalEmbedding:
    """JL map accepted by rejection until every anchor pair is within 1+alpha."""
    if mode not in MODES:
        raise InvalidParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0 < alpha < 1:
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    anchors = np.asarray(X, dtype=np.float64)
    if anchors.ndim != 2 or anchors.shape[0] < 1:
        raise InvalidParameterError("need at least one anchor point")
    if not np.all(np.isfinite(anchors)):
        raise InvalidParameterError("anchor coordinates must be finite")

    radius = 0.0
    if mode == 'additive':
        if not np.any(np.all(anchors == 0, axis=1)):
            anchors = np.vstack([np.zeros((1, anchors.shape[1])), anchors])
            logger.debug("Inserted the origin as an anchor")
        radius = float(np.sqrt(squared_distances(anchors, np.zeros((1, anchors.shape[1])))).max())

    n, d = anchors.shape
    m = target_dimension(n, alpha, c_m)
    rng = derive_rng(seed, 'embedding', 'jl')
    for attempt in range(1, max_retries + 1):
        matrix = rng.standard_normal((m - 1, d)) / math.sqrt(m - 1)
        images = anchors @ matrix.T
        distortion = _pairwise_distortion(anchors, images)
        if distortion <= 1.0 + alpha:
            break
        logger.debug(f"JL draw {attempt} rejected: distortion {distortion:.4f}")
    else:
        raise RetryBudgetExceeded(
            f"no JL draw within 1+{alpha} after {max_retries} tries; increase c_m (now {c_m})")

    anchor_images = np.hstack([images, np.zeros((n, 1))])
    logger.info(f"Embedding: {n} anchors, d={d} -> m={m}, mode={mode}, retries={attempt - 1}")
    return TerminalEmbedding(
        jl=JlMap(matrix=matrix, source_dim=d, target_dim=m, alpha=alpha),
        anchors=anchors,
        anchor_images=anchor_images,
        mode=mode,
        radius=radius,
        c_m=c_m,
        retries=attempt - 1,
        anchor_distortion=distortion,
        iteration_budget=iteration_budget or ITERATIONS_PER_ANCHOR * n,
    )


def _project(u: np.ndarray, radius: float) -> np.ndarray:
    norm = float(np.linalg.norm(u))
    if norm > radius:
        return u * (radius / norm) if norm > 0 else u
    return u


def _solve_inner_products(rows: np.ndarray, targets: np.ndarray, scales: np.ndarray,
                          radius: float, start: np.ndarray, threshold: float,
                          budget: int):
    """Projected subgradient for min_{‖u‖<=radius} max_i |⟨rows_i, u⟩ − targets_i| / scales_i."""
    if rows.shape[0] == 0:
        return _project(start, radius), 0.0, 0

    def residuals(u):
        return (rows @ u - targets) / scales

    u = _project(start, radius)
    res = residuals(u)
    best, best_value = u, float(np.abs(res).max())
    iterations = 0
    while iterations < budget and best_value > threshold:
        iterations += 1
        i = int(np.argmax(np.abs(res)))
        grad = np.sign(res[i]) * rows[i] / scales[i]
        norm = float(np.linalg.norm(grad))
        if norm == 0:
            break
        u = _project(u - (radius / math.sqrt(iterations)) * grad / norm, radius)
        res = residuals(u)
        value = float(np.abs(res).max())
        if value < best_value:
            best, best_value = u, value
    return best, best_value, iterations


def _lift(base: np.ndarray, u: np.ndarray, length: float) -> np.ndarray:
    # last coordinate restores the norm: ‖u‖² + last² = length²
    last = math.sqrt(max(length * length - float(u @ u), 0.0))
    return np.append(base + u, last)


def extend_query(emb: TerminalEmbedding, q: Sequence[float]) -> QueryImage:
    q = as_point(q)
    if q.shape[0] != emb.jl.source_dim:
        raise DimensionMismatchError(f"query has dimension {q.shape[0]}, expected {emb.jl.source_dim}")

    exact = np.flatnonzero(np.all(emb.anchors == q, axis=1))
    if exact.size:
        return QueryImage(emb.anchor_images[exact[0]].copy(), 'anchor', 0.0, 0.0, 0)

    images = emb.anchor_images[:, :-1]
    alpha = emb.jl.alpha
    q_norm = float(np.linalg.norm(q))

    if emb.mode == 'additive' and q_norm >= 2.0 * emb.radius:
        u, residual, iters = _solve_inner_products(
            images, emb.anchors @ q, np.ones(emb.n_anchors), q_norm,
            emb.jl.apply(q), alpha * emb.radius * q_norm, emb.iteration_budget)
        bound = alpha * emb.radius * q_norm
        branch = 'far'
        image = _lift(np.zeros(images.shape[1]), u, q_norm)
    else:
        sq = squared_distances(q[None, :], emb.anchors)[0]
        nearest = int(np.argmin(sq))
        v = q - emb.anchors[nearest]
        v_norm = float(np.sqrt(sq[nearest]))
        offsets = emb.anchors - emb.anchors[nearest]
        lengths = np.sqrt(squared_distances(emb.anchors, emb.anchors[nearest][None, :])[:, 0])
        keep = lengths > 0
        rows = images[keep] - images[nearest]
        u, residual, iters = _solve_inner_products(
            rows, offsets[keep] @ v, lengths[keep], v_norm,
            emb.jl.apply(v), alpha * v_norm, emb.iteration_budget)
        bound = alpha * v_norm
        branch = 'near' if emb.mode == 'additive' else 'terminal'
        image = _lift(images[nearest], u, v_norm)

    if residual > bound:
        logger.warning(f"embedding certificate failed: residual {residual:.4g} > {bound:.4g} "
                       f"after {iters} iterations")
    return QueryImage(image, branch, residual, bound, iters)


def verify_distortion(emb: TerminalEmbedding, queries: Sequence[Sequence[float]]) -> EmbeddingReport:
    report = EmbeddingReport(num_anchors=emb.n_anchors)
    if emb.mode == 'additive':
        report.additive_bound = 8.0 * emb.jl.alpha * emb.radius
    queries = list(queries)
    if not queries:
        return report

    within = 0
    for q in queries:
        q = as_point(q)
        result = extend_query(emb, q)
        true = np.sqrt(squared_distances(emb.anchors, q[None, :])[:, 0])
        mapped = np.sqrt(squared_distances(emb.anchor_images, result.image[None, :])[:, 0])
        additive = float(np.abs(true - mapped).max())
        report.per_query_additive.append(additive)
        report.branches.append(result.branch)
        report.max_additive_error = max(report.max_additive_error, additive)
        keep = true > 0
        if np.any(keep):
            ratio = mapped[keep] / true[keep]
            with np.errstate(divide='ignore'):
                worst = float(np.max(np.maximum(ratio, 1.0 / ratio))) - 1.0
            report.max_multiplicative_error = max(report.max_multiplicative_error, worst)
        if not result.certified:
            report.certificate_failures += 1
        if report.additive_bound is None or additive <= report.additive_bound:
            within += 1

    report.num_queries = len(queries)
    report.fraction_within_bound = within / len(queries)
    logger.info(f"Embedding check: {len(queries)} queries, max additive {report.max_additive_error:.4g}, "
                f"{report.certificate_failures} certificate failures")
    return report
