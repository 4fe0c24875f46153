"""Foreground masks: sparse label sampling, IoU/precision/recall, label propagation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from .seeding import make_rng

LABEL_SUCCESS_P = 1.0 / 8.0
RETRY_CAP = 100_000
CROSSING_COST = 50.0


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray  # (H, W) bool

    def __post_init__(self):
        bits = np.asarray(self.bits).astype(bool)
        if bits.ndim != 2 or 0 in bits.shape:
            raise ValueError("mask must be a non-empty 2D grid")
        object.__setattr__(self, "bits", bits)

    @property
    def dims(self) -> tuple[int, int]:
        return self.bits.shape


@dataclass(frozen=True)
class SparseLabelSet:
    foreground: tuple[tuple[int, int], ...]
    background: tuple[tuple[int, int], ...]

    def to_json(self) -> str:
        return json.dumps(
            {"foreground": [list(p) for p in self.foreground],
             "background": [list(p) for p in self.background]}
        )

    @classmethod
    def from_json(cls, text: str) -> "SparseLabelSet":
        data = json.loads(text)
        return cls(
            tuple(tuple(int(v) for v in p) for p in data.get("foreground", [])),
            tuple(tuple(int(v) for v in p) for p in data.get("background", [])),
        )

    def check(self, gt: BinaryMask) -> None:
        """Raise ValueError unless every label sits on a pixel of its own class."""
        h, w = gt.dims
        for cls_value, labels in ((True, self.foreground), (False, self.background)):
            for r, c in labels:
                if not (0 <= r < h and 0 <= c < w):
                    raise ValueError(f"label {(r, c)} outside {h}x{w} mask")
                if gt.bits[r, c] != cls_value:
                    raise ValueError(f"label {(r, c)} is on the wrong class")


@dataclass(frozen=True)
class MaskReport:
    iou: float
    precision: float
    recall: float


# --------------------------------------------------------------------------
# label sampling

def _positions(rng, gt: np.ndarray, want: bool, count: int) -> list[tuple[int, int]]:
    h, w = gt.shape
    mean = np.array([0.5 * h, 0.5 * w])
    std = np.array([0.5 * h, 0.5 * w])
    out: list[tuple[int, int]] = []
    for _ in range(count):
        for _ in range(RETRY_CAP):
            r, c = np.floor(rng.normal(mean, std) + 0.5).astype(int)
            if 0 <= r < h and 0 <= c < w and gt[r, c] == want:
                out.append((int(r), int(c)))
                break
        else:
            raise RuntimeError("label position sampling exceeded the retry cap")
    return out


def sample_labels(gt: BinaryMask, seed, p: float = LABEL_SUCCESS_P) -> SparseLabelSet:
    """Draw sparse foreground/background hints from a ground-truth mask.

    Per class the number of labels is Geometric(p) on {1, 2, ...}; each label
    position comes from a Gaussian centred on the image with per-axis std of
    half the image size, rounded to the nearest pixel and redrawn when it
    falls off the image or on the other class.
    """
    bits = gt.bits
    if bits.all() or not bits.any():
        raise ValueError("mask needs both foreground and background pixels")
    rng = make_rng(seed)
    n_fg = int(rng.geometric(p))
    n_bg = int(rng.geometric(p))
    fg = _positions(rng, bits, True, n_fg)
    bg = _positions(rng, bits, False, n_bg)
    return SparseLabelSet(tuple(fg), tuple(bg))


# --------------------------------------------------------------------------
# metrics

def mask_metrics(pred: BinaryMask, gt: BinaryMask) -> MaskReport:
    """IoU, precision and recall of ``pred`` against ``gt``.

    Empty denominators: IoU is 1 when both masks are empty; precision is 1
    when both are empty and 0 when only ``pred`` is; recall mirrors that.
    """
    if pred.dims != gt.dims:
        raise ValueError(f"mask size mismatch: {pred.dims} vs {gt.dims}")
    p, g = pred.bits, gt.bits
    inter = int(np.count_nonzero(p & g))
    union = int(np.count_nonzero(p | g))
    n_p = int(np.count_nonzero(p))
    n_g = int(np.count_nonzero(g))
    iou = inter / union if union else 1.0
    precision = inter / n_p if n_p else (1.0 if n_g == 0 else 0.0)
    recall = inter / n_g if n_g else (1.0 if n_p == 0 else 0.0)
    return MaskReport(iou, precision, recall)


# --------------------------------------------------------------------------
# propagation

def _grid_graph(cost: np.ndarray) -> sparse.csr_matrix:
    """4-connected directed grid; entering a pixel costs ``cost`` of that pixel."""
    h, w = cost.shape
    idx = np.arange(h * w).reshape(h, w)
    src, dst = [], []
    for a, b in ((idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])):
        src += [a.ravel(), b.ravel()]
        dst += [b.ravel(), a.ravel()]
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    return sparse.csr_matrix((cost.ravel()[dst], (src, dst)), shape=(h * w, h * w))


def propagate_labels(sketch_raster, labels: SparseLabelSet, crossing_cost: float = CROSSING_COST) -> BinaryMask:
    """Assign every pixel the class of the cheapest-reaching label.

    Moving onto a free pixel costs 1 and onto a stroke pixel ``crossing_cost``
    (4-connectivity). Multi-source shortest paths are solved with Dijkstra.
    """
    strokes = np.asarray(sketch_raster).astype(bool)
    if strokes.ndim != 2:
        raise ValueError("sketch raster must be 2D")
    if not labels.foreground or not labels.background:
        raise ValueError("need at least one foreground and one background label")
    h, w = strokes.shape
    for r, c in labels.foreground + labels.background:
        if not (0 <= r < h and 0 <= c < w):
            raise ValueError(f"label {(r, c)} outside the {h}x{w} raster")
    fg_nodes = sorted({r * w + c for r, c in labels.foreground})
    bg_nodes = sorted({r * w + c for r, c in labels.background})
    if set(fg_nodes) & set(bg_nodes):
        raise ValueError("a pixel carries both a foreground and a background label")

    cost = np.where(strokes, float(crossing_cost), 1.0)
    graph = _grid_graph(cost)
    nodes = np.array(fg_nodes + bg_nodes)
    _, _, sources = dijkstra(graph, directed=True, indices=nodes, min_only=True,
                             return_predecessors=True)
    is_fg = np.zeros(h * w, dtype=bool)
    is_fg[fg_nodes] = True
    return BinaryMask(is_fg[sources].reshape(h, w))
