"""Reconstruction metrics between point clouds: Chamfer distance, EMD, F-score."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from . import assignment
from .geometry_io import (
    GeometryError,
    PointCloud,
    TriangleMesh,
    align_to_reference,
    as_points,
    normalize_unit,
    sample_surface,
    surface_centroid,
    surface_extent,
)
from .seeding import make_rng

DEFAULT_THRESHOLD = 0.01
PRED_SAMPLES = 2048
REF_SAMPLES = 100_000
EMD_SAMPLES = 2048
# above this many candidate pairs the nearest-neighbour search goes through a k-d tree
BRUTE_FORCE_PAIRS = 1_000_000

REDUCE_MODES = ("sum", "mean")
ALIGN_MODES = ("none", "centroid-scale")


@dataclass(frozen=True)
class FScore:
    precision: float
    recall: float
    fscore: float
    threshold: float


@dataclass(frozen=True)
class MetricReport:
    chamfer: float
    emd: float | None  # None when the two sets differ in size
    precision: float
    recall: float
    fscore: float
    threshold: float

    def to_dict(self) -> dict:
        return asdict(self)


def nearest_sq_dist(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Squared distance from every ``src`` point to its nearest ``dst`` point."""
    src = as_points(src)
    dst = as_points(dst)
    if len(src) * len(dst) <= BRUTE_FORCE_PAIRS:
        out = np.empty(len(src))
        # row blocks keep the (block, m, 3) difference tensor small
        step = max(1, BRUTE_FORCE_PAIRS // (4 * len(dst)))
        for s in range(0, len(src), step):
            diff = src[s : s + step, None, :] - dst[None, :, :]
            out[s : s + step] = np.einsum("ijk,ijk->ij", diff, diff).min(axis=1)
        return out
    _, idx = cKDTree(dst).query(src, k=1)
    diff = src - dst[idx]
    return np.einsum("ij,ij->i", diff, diff)


def chamfer_distance(s1, s2, reduce: str = "sum") -> float:
    """Symmetric Chamfer distance with squared Euclidean nearest-neighbour terms.

    ``reduce="sum"`` adds the per-point terms of both directions;
    ``reduce="mean"`` averages each direction before adding.
    """
    if reduce not in REDUCE_MODES:
        raise ValueError(f"reduce must be one of {REDUCE_MODES}")
    d12 = nearest_sq_dist(s1, s2)
    d21 = nearest_sq_dist(s2, s1)
    if reduce == "sum":
        return float(d12.sum() + d21.sum())
    return float(d12.mean() + d21.mean())


def emd_exact(s1, s2, backend: str = "scipy") -> float:
    """Earth mover's distance: minimum total Euclidean cost over bijections."""
    a = as_points(s1)
    b = as_points(s2)
    if len(a) != len(b):
        raise GeometryError(f"EMD needs equal-size sets, got {len(a)} and {len(b)}")
    cost = cdist(a, b)
    match = assignment.solve(cost, backend=backend)
    return float(cost[np.arange(len(a)), match].sum())


def fscore(pred, ref, threshold: float = DEFAULT_THRESHOLD) -> FScore:
    """Precision/recall/F-score with an inclusive Euclidean distance threshold."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    d_pred = np.sqrt(nearest_sq_dist(pred, ref))
    d_ref = np.sqrt(nearest_sq_dist(ref, pred))
    precision = float(np.mean(d_pred <= threshold))
    recall = float(np.mean(d_ref <= threshold))
    return FScore(precision, recall, harmonic_mean(precision, recall), float(threshold))


def harmonic_mean(precision: float, recall: float) -> float:
    if precision + recall > 0:
        return 2.0 * precision * recall / (precision + recall)
    return 0.0


def reference_cloud(mesh: TriangleMesh, seed, n: int = REF_SAMPLES) -> PointCloud:
    """The fixed, unit-normalized reference sample of a ground-truth mesh."""
    return normalize_unit(sample_surface(mesh, n, seed))


def evaluate_pair(
    pred_mesh: TriangleMesh,
    ref_cloud: PointCloud,
    seed,
    *,
    n_pred: int = PRED_SAMPLES,
    n_emd: int = EMD_SAMPLES,
    threshold: float = DEFAULT_THRESHOLD,
    reduce: str = "sum",
    align: str = "centroid-scale",
    emd_backend: str = "scipy",
) -> MetricReport:
    """Evaluate one predicted mesh against a reference point set.

    ``n_pred`` points are sampled from the prediction. The reference is
    normalized to unit size; the prediction is aligned to it when
    ``align="centroid-scale"``, using the mesh's surface centroid and
    bounding box. Chamfer and F-score use the full reference
    set, EMD uses its first ``n_emd`` points against the first ``n_emd``
    predicted points. Set ``n_emd=0`` to skip EMD.
    """
    if align not in ALIGN_MODES:
        raise ValueError(f"align must be one of {ALIGN_MODES}")
    ref = normalize_unit(ref_cloud)
    pred = sample_surface(pred_mesh, n_pred, make_rng(seed))
    if align == "centroid-scale":
        # mesh statistics are exact; estimates from the sparse sample are too noisy
        pred = align_to_reference(
            pred, ref, center=surface_centroid(pred_mesh), side=surface_extent(pred_mesh)
        )

    cd = chamfer_distance(pred, ref, reduce=reduce)
    emd = None
    if n_emd:
        k = min(n_emd, len(ref), len(pred))
        emd = emd_exact(pred.points[:k], ref.points[:k], backend=emd_backend)
    fs = fscore(pred, ref, threshold)
    return MetricReport(
        chamfer=cd,
        emd=emd,
        precision=fs.precision,
        recall=fs.recall,
        fscore=fs.fscore,
        threshold=fs.threshold,
    )
