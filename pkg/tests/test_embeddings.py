import math

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.embeddings import (
    extend_query,
    make_embedding,
    target_dimension,
    verify_distortion,
)
from src.errors import DimensionMismatchError, InvalidParameterError, RetryBudgetExceeded


@pytest.fixture
def anchors():
    return np.random.default_rng(11).normal(size=(20, 30)) + 1.0


def test_target_dimension_growth():
    assert target_dimension(1, 0.5) == 2
    assert target_dimension(1000, 0.5) > target_dimension(10, 0.5)
    assert target_dimension(100, 0.1) > target_dimension(100, 0.5)
    assert target_dimension(100, 0.5) == math.ceil(4.0 * 4 * math.log(100)) + 1


def test_single_anchor():
    emb = make_embedding(np.array([[1.0, 2.0, 3.0]]), alpha=0.5, mode='terminal', seed=0)
    assert emb.n_anchors == 1
    assert emb.target_dim == 2
    assert emb.retries == 0


def test_anchor_pairs_within_distortion(anchors):
    emb = make_embedding(anchors, alpha=0.5, mode='terminal', seed=3)
    assert emb.anchor_distortion <= 1.5
    for i in range(emb.n_anchors):
        for j in range(i + 1, emb.n_anchors):
            true = np.linalg.norm(emb.anchors[i] - emb.anchors[j])
            mapped = np.linalg.norm(emb.anchor_images[i] - emb.anchor_images[j])
            assert true / 1.5 * (1 - 1e-12) <= mapped <= true * 1.5 * (1 + 1e-12)


def test_anchor_images_have_zero_last_coordinate(anchors):
    emb = make_embedding(anchors, alpha=0.5, seed=1)
    assert emb.anchor_images.shape == (emb.n_anchors, emb.target_dim)
    assert_array_equal(emb.anchor_images[:, -1], np.zeros(emb.n_anchors))


def test_additive_mode_inserts_origin(anchors):
    emb = make_embedding(anchors, alpha=0.5, mode='additive', seed=1)
    assert emb.n_anchors == anchors.shape[0] + 1
    assert_array_equal(emb.anchors[0], np.zeros(anchors.shape[1]))
    assert emb.radius == pytest.approx(np.linalg.norm(anchors, axis=1).max(), rel=1e-12)

    with_origin = np.vstack([anchors, np.zeros((1, anchors.shape[1]))])
    assert make_embedding(with_origin, alpha=0.5, mode='additive', seed=1).n_anchors == with_origin.shape[0]


def test_anchor_query_returns_anchor_image(anchors):
    emb = make_embedding(anchors, alpha=0.5, seed=4)
    result = extend_query(emb, anchors[5])
    assert result.branch == 'anchor'
    assert result.certified
    assert_array_equal(result.image, emb.anchor_images[6])


def test_far_query_keeps_distance_to_origin(anchors):
    emb = make_embedding(anchors, alpha=0.5, mode='additive', seed=2)
    q = np.full(anchors.shape[1], 50.0)
    assert np.linalg.norm(q) >= 2 * emb.radius
    result = extend_query(emb, q)
    assert result.branch == 'far'
    assert np.linalg.norm(result.image) == pytest.approx(np.linalg.norm(q), rel=1e-9)


def test_terminal_query_keeps_distance_to_nearest_anchor(anchors):
    emb = make_embedding(anchors, alpha=0.5, mode='terminal', seed=5)
    q = anchors[3] + 0.05 * np.random.default_rng(0).normal(size=anchors.shape[1])
    nearest = int(np.argmin(np.linalg.norm(anchors - q, axis=1)))
    result = extend_query(emb, q)
    assert result.branch == 'terminal'
    mapped = np.linalg.norm(result.image - emb.anchor_images[nearest])
    assert mapped == pytest.approx(np.linalg.norm(q - anchors[nearest]), rel=1e-9)


def test_same_seed_same_map(anchors):
    a = make_embedding(anchors, alpha=0.5, seed=7)
    b = make_embedding(anchors, alpha=0.5, seed=7)
    assert_array_equal(a.jl.matrix, b.jl.matrix)
    q = anchors[0] * 0.5
    assert_array_equal(extend_query(a, q).image, extend_query(b, q).image)


def test_empty_query_list(anchors):
    report = verify_distortion(make_embedding(anchors, alpha=0.5, seed=0), [])
    assert report.num_queries == 0
    assert report.fraction_within_bound == 1.0
    assert report.per_query_additive == []


def test_anchor_queries_within_additive_bound(anchors):
    emb = make_embedding(anchors, alpha=0.5, mode='additive', seed=9)
    report = verify_distortion(emb, anchors)
    assert report.num_queries == anchors.shape[0]
    assert set(report.branches) == {'anchor'}
    assert report.max_additive_error <= 2 * 0.5 * emb.radius
    assert report.additive_bound == pytest.approx(8 * 0.5 * emb.radius)
    assert report.fraction_within_bound == 1.0
    assert report.certificate_failures == 0


def test_mixed_queries_are_reported(anchors):
    emb = make_embedding(anchors, alpha=0.5, mode='additive', seed=9)
    queries = [anchors[1] + 0.1, np.full(anchors.shape[1], 40.0)]
    report = verify_distortion(emb, queries)
    assert report.branches == ['near', 'far']
    assert len(report.per_query_additive) == 2
    assert report.max_additive_error == max(report.per_query_additive)


def test_invalid_arguments(anchors):
    with pytest.raises(InvalidParameterError):
        make_embedding(anchors, alpha=0.5, mode='multiplicative')
    with pytest.raises(InvalidParameterError):
        make_embedding(anchors, alpha=1.5)
    with pytest.raises(DimensionMismatchError):
        extend_query(make_embedding(anchors, alpha=0.5), np.zeros(3))


def test_retry_budget_exhausted():
    X = np.random.default_rng(0).normal(size=(50, 50))
    with pytest.raises(RetryBudgetExceeded):
        make_embedding(X, alpha=0.1, mode='terminal', c_m=0.001, max_retries=3)


def test_halving_alpha_triples_dimension():
    for n in (10, 100, 1000):
        assert target_dimension(n, 0.25) >= 3 * target_dimension(n, 0.5)


def test_larger_cm_needs_no_more_retries(anchors):
    fewer = sum(
        make_embedding(anchors, alpha=0.5, mode='terminal', seed=s, c_m=12.0).retries
        <= make_embedding(anchors, alpha=0.5, mode='terminal', seed=s, c_m=3.0).retries
        for s in range(20)
    )
    assert fewer > 10
