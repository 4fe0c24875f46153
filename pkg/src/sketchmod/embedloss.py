"""Regression loss aligning embedding similarities with shape distances.

Shape distances and embedding dot products are both turned into row-wise
softmax distributions over the batch; the loss is the mean absolute
difference between the two B x B probability tables. The anchor itself is
part of every row (its Chamfer distance to itself is 0).
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .metrics3d import chamfer_distance
from .seeding import make_rng

THREE_SIGMA = 0.997 / 3.0
UNIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EmbeddingBatch:
    rows: np.ndarray  # (B, d)
    shape_ids: tuple[str, ...] = ()

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 2:
            raise ValueError("embedding batch must be a (B, d) array with B >= 2")
        if not np.all(np.isfinite(rows)):
            raise ValueError("embeddings must be finite")
        ids = tuple(self.shape_ids) or tuple(str(i) for i in range(len(rows)))
        if len(ids) != len(rows):
            raise ValueError("one shape id per embedding row")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "shape_ids", ids)

    def __len__(self) -> int:
        return len(self.rows)

    def normalized(self) -> "EmbeddingBatch":
        norms = np.linalg.norm(self.rows, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise ValueError("cannot normalize a zero embedding")
        return EmbeddingBatch(self.rows / norms, self.shape_ids)

    def is_unit(self) -> bool:
        return bool(np.all(np.abs(np.linalg.norm(self.rows, axis=1) - 1.0) <= UNIT_TOL))


@dataclass(frozen=True, eq=False)
class ShapeDistanceMatrix:
    d_cd: np.ndarray  # (B, B)
    sigma: np.ndarray  # (B,)

    def __post_init__(self):
        d = np.array(self.d_cd, dtype=np.float64)
        s = np.array(self.sigma, dtype=np.float64).reshape(-1)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or len(s) != len(d):
            raise ValueError("need a (B, B) distance matrix and B sigmas")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(s))):
            raise ValueError("distances and sigmas must be finite")
        if np.any(d < 0) or np.any(np.diag(d) != 0):
            raise ValueError("distances must be non-negative with a zero diagonal")
        if not np.allclose(d, d.T, rtol=1e-12, atol=0):
            raise ValueError("distance matrix must be symmetric")
        if np.any(s <= 0):
            raise ValueError("sigmas must be positive")
        d.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "d_cd", d)
        object.__setattr__(self, "sigma", s)

    def __len__(self) -> int:
        return len(self.sigma)

    @classmethod
    def from_distances(cls, d_cd, sigma=None) -> "ShapeDistanceMatrix":
        """Build from distances; missing sigmas follow the three-sigma rule on each row's max."""
        d = np.asarray(d_cd, dtype=np.float64)
        if sigma is None:
            sigma = THREE_SIGMA * d.max(axis=1)
        return cls(d, sigma)


@dataclass(frozen=True, eq=False)
class LossReport:
    loss: float
    grad: np.ndarray  # (B, d), w.r.t. the un-normalized embeddings


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# --------------------------------------------------------------------------
# sigma

def sigma_from_dataset(
    shape_id: str,
    dataset_clouds: Mapping[str, object],
    subset_size: int,
    seed: int,
    reduce: str = "sum",
) -> float:
    """Per-shape bandwidth ``0.997/3 * max Chamfer distance`` over a seeded subset.

    The subset is a prefix of one fixed permutation of the (sorted) shape ids,
    so a larger ``subset_size`` always contains the smaller subset.
    """
    if not dataset_clouds:
        raise ValueError("dataset is empty")
    if shape_id not in dataset_clouds:
        raise KeyError(shape_id)
    ids = sorted(dataset_clouds)
    if not 1 <= subset_size <= len(ids):
        raise ValueError("subset_size must be in [1, dataset size]")
    order = make_rng(seed, "sigma-subset").permutation(len(ids))
    anchor = dataset_clouds[shape_id]
    d_max = max(
        chamfer_distance(anchor, dataset_clouds[ids[k]], reduce=reduce) for k in order[:subset_size]
    )
    sigma = THREE_SIGMA * d_max
    if not sigma > 0:
        raise ValueError(f"sigma for {shape_id!r} is zero; the subset holds no other shape")
    return sigma


# --------------------------------------------------------------------------
# probabilities

def cd_probabilities(dist: ShapeDistanceMatrix) -> np.ndarray:
    """Row ``A``: softmax over B of ``-d_cd(A, B)^2 / (2 sigma_A^2)``."""
    logits = -(dist.d_cd**2) / (2.0 * dist.sigma[:, None] ** 2)
    return _softmax_rows(logits)


def cd_to_prob(dist: ShapeDistanceMatrix, anchor: int) -> np.ndarray:
    if not 0 <= anchor < len(dist):
        raise IndexError("anchor out of range")
    return cd_probabilities(dist)[anchor]


def emb_probabilities(emb: EmbeddingBatch) -> np.ndarray:
    """Row ``A``: softmax over B of ``f_A . f_B`` (rows must be unit length)."""
    if not emb.is_unit():
        raise ValueError("embedding rows must be unit-normalized")
    return _softmax_rows(emb.rows @ emb.rows.T)


def emb_to_prob(emb: EmbeddingBatch, anchor: int) -> np.ndarray:
    if not 0 <= anchor < len(emb):
        raise IndexError("anchor out of range")
    return emb_probabilities(emb)[anchor]


# --------------------------------------------------------------------------
# loss

def _check_sizes(emb: EmbeddingBatch, dist: ShapeDistanceMatrix) -> None:
    if len(emb) != len(dist):
        raise ValueError(f"batch size mismatch: {len(emb)} embeddings, {len(dist)} shapes")


def loss_value(emb: EmbeddingBatch, dist: ShapeDistanceMatrix) -> float:
    _check_sizes(emb, dist)
    p_hat = emb_probabilities(emb.normalized())
    p = cd_probabilities(dist)
    return float(np.abs(p_hat - p).sum() / len(emb) ** 2)


def regression_loss(emb: EmbeddingBatch, dist: ShapeDistanceMatrix) -> LossReport:
    """Loss ``sum_{A,B} |p_hat(A,B) - p(A,B)| / B^2`` and its gradient.

    The gradient is taken w.r.t. ``emb.rows`` before unit normalization,
    back-propagating through the normalization and the softmax. The
    subgradient of ``|x|`` at 0 is 0.
    """
    _check_sizes(emb, dist)
    x = emb.rows
    b = len(x)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero embedding")
    f = x / norms
    p_hat = _softmax_rows(f @ f.T)
    p = cd_probabilities(dist)
    diff = p_hat - p
    loss = float(np.abs(diff).sum() / b**2)

    g_p = np.sign(diff) / b**2
    # softmax backward, row by row
    g_s = p_hat * (g_p - (g_p * p_hat).sum(axis=1, keepdims=True))
    g_f = (g_s + g_s.T) @ f
    # normalization backward: project out the radial part, divide by the norm
    g_x = (g_f - f * (f * g_f).sum(axis=1, keepdims=True)) / norms
    return LossReport(loss, g_x)


def kink_margin(emb: EmbeddingBatch, dist: ShapeDistanceMatrix) -> float:
    """Smallest ``|p_hat - p|``; finite differences are unreliable when it is tiny."""
    return float(np.abs(emb_probabilities(emb.normalized()) - cd_probabilities(dist)).min())


def numeric_gradient(emb: EmbeddingBatch, dist: ShapeDistanceMatrix, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of :func:`loss_value` w.r.t. every embedding entry."""
    x = np.array(emb.rows)
    g = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        old = x[idx]
        x[idx] = old + h
        up = loss_value(EmbeddingBatch(x, emb.shape_ids), dist)
        x[idx] = old - h
        down = loss_value(EmbeddingBatch(x, emb.shape_ids), dist)
        x[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """``max|a - b|`` over the larger gradient's max magnitude (at least ``floor``).

    The floor keeps an exactly flat loss (true gradient 0, finite differences
    at round-off level) from reading as a 100% error.
    """
    scale = max(np.abs(a).max(), np.abs(b).max(), floor)
    return float(np.abs(a - b).max() / scale)


def gradient_check(emb: EmbeddingBatch, dist: ShapeDistanceMatrix, h: float = 1e-5) -> float:
    """Relative error between the analytic and finite-difference gradients."""
    return relative_error(regression_loss(emb, dist).grad, numeric_gradient(emb, dist, h))


def pairwise_chamfer(clouds: Sequence, reduce: str = "sum") -> np.ndarray:
    """Symmetric B x B Chamfer matrix with an exact zero diagonal."""
    n = len(clouds)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = chamfer_distance(clouds[i], clouds[j], reduce=reduce)
    return d
