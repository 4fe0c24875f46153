import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from sketchmod.embedloss import (
    EmbeddingBatch,
    ShapeDistanceMatrix,
    cd_probabilities,
    cd_to_prob,
    emb_probabilities,
    emb_to_prob,
    gradient_check,
    kink_margin,
    pairwise_chamfer,
    regression_loss,
    sigma_from_dataset,
)
from sketchmod.geometry_io import PointCloud


def random_instance(rng, b, d):
    x = rng.normal(size=(b, d))
    pts = rng.normal(size=(b, 2))
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    sigma = rng.uniform(0.3, 2.0, size=b)
    return EmbeddingBatch(x), ShapeDistanceMatrix(dist, sigma)


def straight_line_loss(x, dist, sigma):
    """Loop-by-loop evaluation of the two distributions and their L1 gap."""
    b = len(x)
    f = [[v / math.sqrt(sum(t * t for t in row)) for v in row] for row in x]
    total = 0.0
    for a in range(b):
        p_den = sum(math.exp(-dist[a][k] ** 2 / (2 * sigma[a] ** 2)) for k in range(b))
        q_den = sum(math.exp(sum(u * v for u, v in zip(f[a], f[k]))) for k in range(b))
        for c in range(b):
            p = math.exp(-dist[a][c] ** 2 / (2 * sigma[a] ** 2)) / p_den
            q = math.exp(sum(u * v for u, v in zip(f[a], f[c]))) / q_den
            total += abs(q - p)
    return total / b**2


# ------------------------------------------------------------------ sigma

def two_point(offset):
    return PointCloud([[0, offset, 0], [1, offset, 0]])


def test_sigma_single_shape_is_error():
    with pytest.raises(ValueError):
        sigma_from_dataset("A", {"A": two_point(0)}, 1, seed=0)


def test_sigma_three_shape_toy():
    data = {"A": two_point(0), "B": two_point(math.sqrt(0.5)), "C": two_point(math.sqrt(1.25))}
    d = pairwise_chamfer([data["A"], data["B"], data["C"]])
    assert d[0, 1] == pytest.approx(2.0) and d[0, 2] == pytest.approx(5.0)
    assert sigma_from_dataset("A", data, 3, seed=0) == pytest.approx(0.997 / 3 * 5.0)
    assert sigma_from_dataset("A", data, 3, seed=0) == pytest.approx(1.6617, abs=1e-4)


def test_sigma_monotone_in_subset(rng):
    data = {f"s{i}": PointCloud(rng.normal(size=(10, 3)) + i * 0.1) for i in range(12)}
    values = []
    for k in range(1, 13):
        try:
            values.append(sigma_from_dataset("s3", data, k, seed=5))
        except ValueError:
            values.append(0.0)
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert values[-1] > 0


# ------------------------------------------------------------------ probabilities

def test_cd_uniform_when_equal():
    # the anchor's own zero distance is part of the row, so "all equal" means all zero
    dist = ShapeDistanceMatrix(np.zeros((4, 4)), np.ones(4))
    np.testing.assert_allclose(cd_to_prob(dist, 2), 0.25, atol=1e-15)


def test_cd_two_thirds():
    sigma = 0.7
    x = sigma * math.sqrt(2 * math.log(2))
    dist = ShapeDistanceMatrix([[0, x], [x, 0]], [sigma, sigma])
    np.testing.assert_allclose(cd_to_prob(dist, 0), [2 / 3, 1 / 3], atol=1e-15)


def test_cd_scale_invariance(rng):
    _, dist = random_instance(rng, 6, 3)
    scaled = ShapeDistanceMatrix(dist.d_cd * 3.7, dist.sigma * 3.7)
    np.testing.assert_allclose(cd_probabilities(scaled), cd_probabilities(dist), atol=1e-14)


def test_cd_rejects_bad_matrix():
    with pytest.raises(ValueError):
        ShapeDistanceMatrix([[0, 1], [2, 0]], [1, 1])
    with pytest.raises(ValueError):
        ShapeDistanceMatrix([[0, 1], [1, 0]], [1, 0])
    with pytest.raises(ValueError):
        ShapeDistanceMatrix([[0, np.inf], [np.inf, 0]], [1, 1])


def test_emb_identical_rows_uniform():
    emb = EmbeddingBatch(np.tile([[0.6, 0.8]], (5, 1)))
    np.testing.assert_allclose(emb_to_prob(emb, 0), 0.2, atol=1e-15)


def test_emb_orthogonal_pair():
    emb = EmbeddingBatch([[1.0, 0.0], [0.0, 1.0]])
    e = math.e
    np.testing.assert_allclose(emb_to_prob(emb, 0), [e / (e + 1), 1 / (e + 1)], atol=1e-15)


def test_emb_requires_unit_rows():
    with pytest.raises(ValueError):
        emb_to_prob(EmbeddingBatch([[2.0, 0.0], [0.0, 1.0]]), 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 12), st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_probabilities_sum_to_one(b, d, seed):
    emb, dist = random_instance(np.random.default_rng(seed), b, d)
    p_hat = emb_probabilities(emb.normalized())
    p = cd_probabilities(dist)
    assert np.all(np.abs(p_hat.sum(axis=1) - 1) <= 1e-9)
    assert np.all(np.abs(p.sum(axis=1) - 1) <= 1e-9)
    assert np.all((p_hat > 0) & (p_hat < 1))


# ------------------------------------------------------------------ loss

def test_zero_loss_symmetric_pair():
    # p row: softmax(0, -1/2); p_hat row: softmax(1, cos t) -> equal when cos t = 1/2
    dist = ShapeDistanceMatrix([[0, 1.0], [1.0, 0]], [1.0, 1.0])
    emb = EmbeddingBatch([[1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    report = regression_loss(emb, dist)
    assert report.loss == pytest.approx(0.0, abs=1e-15)


def test_b3_hand_instance():
    x = [[1.0, 2.0, -0.5], [0.3, -1.0, 0.8], [-0.7, 0.1, 1.2]]
    d = [[0.0, 0.8, 1.5], [0.8, 0.0, 1.1], [1.5, 1.1, 0.0]]
    sigma = [0.5, 0.4, 0.6]
    report = regression_loss(EmbeddingBatch(x), ShapeDistanceMatrix(d, sigma))
    assert report.loss == pytest.approx(straight_line_loss(x, d, sigma), abs=1e-14)


def test_dimension_mismatch(rng):
    emb, _ = random_instance(rng, 4, 3)
    _, dist = random_instance(rng, 5, 3)
    with pytest.raises(ValueError):
        regression_loss(emb, dist)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        b, d = int(rng.integers(2, 17)), int(rng.integers(1, 33))
        emb, dist = random_instance(rng, b, d)
        while kink_margin(emb, dist) < 1e-4:
            emb = EmbeddingBatch(emb.rows + 1e-2 * rng.normal(size=emb.rows.shape))
        worst = max(worst, gradient_check(emb, dist, h=1e-5))
    assert worst < 1e-5


def test_gradient_is_tangent_to_sphere(rng):
    emb, dist = random_instance(rng, 6, 4)
    g = regression_loss(emb, dist).grad
    # scaling a row does not change the loss, so the gradient is orthogonal to it
    np.testing.assert_allclose(np.einsum("ij,ij->i", g, emb.rows), 0, atol=1e-15)


def test_permutation_invariance(rng):
    emb, dist = random_instance(rng, 7, 5)
    perm = rng.permutation(7)
    p_emb = EmbeddingBatch(emb.rows[perm])
    p_dist = ShapeDistanceMatrix(dist.d_cd[np.ix_(perm, perm)], dist.sigma[perm])
    a, b = regression_loss(emb, dist), regression_loss(p_emb, p_dist)
    assert a.loss == pytest.approx(b.loss, abs=1e-14)
    np.testing.assert_allclose(a.grad[perm], b.grad, atol=1e-14)


def test_rotation_invariance(rng):
    emb, dist = random_instance(rng, 6, 8)
    q = special_ortho_group.rvs(8, random_state=3)
    rotated = EmbeddingBatch(emb.rows @ q.T)
    assert regression_loss(rotated, dist).loss == pytest.approx(regression_loss(emb, dist).loss, abs=1e-14)


def test_loss_zero_iff_distributions_match(rng):
    emb, dist = random_instance(rng, 5, 3)
    assert regression_loss(emb, dist).loss > 0
    assert np.abs(emb_probabilities(emb.normalized()) - cd_probabilities(dist)).max() > 0
