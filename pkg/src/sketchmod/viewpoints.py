"""Camera viewpoints: 8 base views per shape, 5 perturbed views around each."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .seeding import make_rng

N_BASE = 8
N_PERTURBED = 5
BASE_ELEVATION = 10.0
BASE_DISTANCE = 1.5
RETRY_CAP = 10_000


@dataclass(frozen=True)
class ViewpointParams:
    angle_sigma: float = 7.0  # degrees
    min_dev: float = 5.0
    max_dev: float = 15.0
    distance_sigma: float = 0.05
    distance_range: tuple[float, float] = (1.4, 1.6)

    def __post_init__(self):
        if not self.angle_sigma > 0 or not self.distance_sigma > 0:
            raise ValueError("sigmas must be positive")
        if not 0 <= self.min_dev <= self.max_dev:
            raise ValueError("need 0 <= min_dev <= max_dev")
        lo, hi = self.distance_range
        if not lo <= BASE_DISTANCE <= hi:
            raise ValueError("distance range must contain the base distance")


@dataclass(frozen=True)
class Viewpoint:
    azimuth: float  # degrees, [0, 360)
    elevation: float  # degrees
    distance: float
    base_id: int
    is_base: bool

    def to_dict(self) -> dict:
        return asdict(self)


def circular_diff(a: float, b: float) -> float:
    """Signed difference ``a - b`` wrapped to [-180, 180)."""
    return (a - b + 180.0) % 360.0 - 180.0


def base_viewpoints() -> list[Viewpoint]:
    return [
        Viewpoint(45.0 * k, BASE_ELEVATION, BASE_DISTANCE, k, True) for k in range(N_BASE)
    ]


def _deviation(rng: np.random.Generator, params: ViewpointParams) -> float:
    for _ in range(RETRY_CAP):
        d = rng.normal(0.0, params.angle_sigma)
        if params.min_dev <= abs(d) <= params.max_dev:
            return float(d)
    raise RuntimeError("angle rejection sampling exceeded the retry cap")


def _distance(rng: np.random.Generator, params: ViewpointParams) -> float:
    lo, hi = params.distance_range
    for _ in range(RETRY_CAP):
        d = rng.normal(BASE_DISTANCE, params.distance_sigma)
        if lo <= d <= hi:
            return float(d)
    raise RuntimeError("distance rejection sampling exceeded the retry cap")


def perturb(base: Viewpoint, seed, n: int = N_PERTURBED, params: ViewpointParams | None = None) -> list[Viewpoint]:
    """Sample ``n`` views around a base view.

    Elevation and azimuth deviations are drawn independently from
    Normal(0, sigma) and each is redrawn until its magnitude lies in
    ``[min_dev, max_dev]``; the distance is a normal truncated to
    ``distance_range``.
    """
    if not base.is_base:
        raise ValueError("perturb() needs a base viewpoint")
    params = params or ViewpointParams()
    rng = make_rng(seed)
    out = []
    for _ in range(n):
        elev = base.elevation + _deviation(rng, params)
        azim = (base.azimuth + _deviation(rng, params)) % 360.0
        out.append(Viewpoint(float(azim), float(elev), _distance(rng, params), base.base_id, False))
    return out


def dataset_viewpoints(shape_id: str, seed: int, params: ViewpointParams | None = None) -> list[Viewpoint]:
    """48 views: each base view followed by its 5 perturbations.

    Streams are keyed by ``(seed, shape_id, base_id)`` so manifest order is irrelevant.
    """
    views = []
    for base in base_viewpoints():
        views.append(base)
        views.extend(perturb(base, make_rng(seed, "views", shape_id, base.base_id), params=params))
    return views


def select_test_viewpoint(shape_id: str, n_choices: int, seed: int) -> int:
    """Fixed uniform pick of one of ``n_choices`` views for a test shape."""
    if n_choices < 1:
        raise ValueError("n_choices must be >= 1")
    return int(make_rng(seed, "test-view", shape_id).integers(0, n_choices))


def check_viewpoint(v: Viewpoint, params: ViewpointParams | None = None) -> None:
    """Raise AssertionError if ``v`` violates the viewpoint invariants."""
    params = params or ViewpointParams()
    if v.is_base:
        assert v.elevation == BASE_ELEVATION and v.distance == BASE_DISTANCE
        assert v.azimuth == 45.0 * v.base_id
        return
    lo, hi = params.distance_range
    assert lo <= v.distance <= hi, v
    assert params.min_dev <= abs(v.elevation - BASE_ELEVATION) <= params.max_dev, v
    dev = abs(circular_diff(v.azimuth, 45.0 * v.base_id))
    # wrapping to [0, 360) can move the deviation by one ulp
    assert params.min_dev - 1e-9 <= dev <= params.max_dev + 1e-9, v
    assert 0.0 <= v.azimuth < 360.0, v
