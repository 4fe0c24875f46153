"""Meshes and point clouds: loading, surface sampling, normalization, alignment."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .seeding import make_rng


class GeometryError(ValueError):
    """Invalid or degenerate geometry."""


class ObjParseError(GeometryError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int64

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise GeometryError("face index out of range")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    def face_areas(self) -> np.ndarray:
        tri = self.vertices[self.faces]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    @property
    def area(self) -> float:
        return float(self.face_areas().sum())


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray  # (N, 3) float64

    def __post_init__(self):
        p = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        if len(p) == 0:
            raise GeometryError("point cloud is empty")
        if not np.all(np.isfinite(p)):
            raise GeometryError("point cloud has non-finite coordinates")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @property
    def count(self) -> int:
        return len(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def bounds(self) -> "Aabb":
        return Aabb(self.points.min(axis=0), self.points.max(axis=0))


@dataclass(frozen=True, eq=False)
class Aabb:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64)
        hi = np.asarray(self.max, dtype=np.float64)
        if np.any(lo > hi):
            raise GeometryError("Aabb min exceeds max")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)


def as_points(cloud) -> np.ndarray:
    """(N, 3) array view of a PointCloud or array-like."""
    if isinstance(cloud, PointCloud):
        return cloud.points
    return PointCloud(cloud).points


# --------------------------------------------------------------------------
# OBJ

def _obj_index(token: str, n_vertices: int, lineno: int) -> int:
    ref = token.split("/", 1)[0]
    try:
        idx = int(ref)
    except ValueError:
        raise ObjParseError(f"bad face index {token!r}", lineno) from None
    if idx > 0:
        idx -= 1
    elif idx < 0:
        # relative to the vertices seen so far
        idx = n_vertices + idx
    else:
        raise ObjParseError("face index 0 is invalid", lineno)
    if not 0 <= idx < n_vertices:
        raise ObjParseError(f"face index {token!r} out of range ({n_vertices} vertices)", lineno)
    return idx


def parse_obj(text: str) -> TriangleMesh:
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    pending: list[tuple[list[str], int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError("vertex needs 3 coordinates", lineno)
            try:
                x, y, z = (float(t) for t in parts[1:4])
            except ValueError:
                raise ObjParseError(f"bad vertex {line!r}", lineno) from None
            vertices.append((x, y, z))
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError("face needs at least 3 vertices", lineno)
            pending.append((parts[1:], lineno, len(vertices)))
    for tokens, lineno, n_seen in pending:
        # negative indices are relative to the vertices declared before the face
        idx = []
        for t in tokens:
            i = _obj_index(t, n_seen if t.lstrip().startswith("-") else len(vertices), lineno)
            idx.append(i)
        for k in range(1, len(idx) - 1):
            faces.append((idx[0], idx[k], idx[k + 1]))
    if not faces:
        raise GeometryError("mesh has no faces")
    return TriangleMesh(np.array(vertices), np.array(faces))


def load_obj(path) -> TriangleMesh:
    """Load a Wavefront OBJ file; polygons are fan-triangulated from their first vertex."""
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        return parse_obj(fh.read())


def write_obj(mesh: TriangleMesh, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.vertices.tolist():
            fh.write(f"v {x!r} {y!r} {z!r}\n")
        for a, b, c in mesh.faces.tolist():
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


# --------------------------------------------------------------------------
# point cloud files

def read_points(path) -> PointCloud:
    """Read ``x y z`` text (one point per line) or binary little-endian float64 triples.

    Binary is selected by the ``.bin`` suffix.
    """
    if os.fspath(path).endswith(".bin"):
        data = np.fromfile(path, dtype="<f8")
        if data.size % 3:
            raise GeometryError(f"{path}: binary size is not a multiple of 3 float64")
        return PointCloud(data.reshape(-1, 3))
    data = np.loadtxt(path, dtype=np.float64, ndmin=2)
    if data.shape[1] != 3:
        raise GeometryError(f"{path}: expected 3 columns, got {data.shape[1]}")
    return PointCloud(data)


def write_points(cloud: PointCloud, path) -> None:
    pts = as_points(cloud)
    if os.fspath(path).endswith(".bin"):
        np.ascontiguousarray(pts, dtype="<f8").tofile(path)
        return
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in pts.tolist():
            fh.write(f"{x!r} {y!r} {z!r}\n")


# --------------------------------------------------------------------------
# sampling / normalization

def sample_surface(mesh: TriangleMesh, n: int, seed, return_faces: bool = False):
    """Sample ``n`` points uniformly over the mesh surface.

    A triangle is picked with probability proportional to its area and the
    point is placed uniformly inside it with folded barycentric coordinates.
    With ``return_faces`` the chosen face index of every point is returned too.
    """
    if n < 1:
        raise ValueError("n must be positive")
    areas = mesh.face_areas()
    total = areas.sum()
    if not total > 0:
        raise GeometryError("mesh has zero surface area")
    rng = make_rng(seed)
    cum = np.cumsum(areas)
    face_idx = np.searchsorted(cum, rng.random(n) * total, side="right")
    np.minimum(face_idx, len(areas) - 1, out=face_idx)
    uv = rng.random((n, 2))
    flip = uv.sum(axis=1) > 1.0
    uv[flip] = 1.0 - uv[flip]
    tri = mesh.vertices[mesh.faces[face_idx]]
    pts = tri[:, 0] + uv[:, :1] * (tri[:, 1] - tri[:, 0]) + uv[:, 1:] * (tri[:, 2] - tri[:, 0])
    cloud = PointCloud(pts)
    if return_faces:
        return cloud, face_idx
    return cloud


def normalize_unit(cloud: PointCloud) -> PointCloud:
    """Center the bounding box at the origin and scale its longest side to 1."""
    pts = as_points(cloud)
    box = Aabb(pts.min(axis=0), pts.max(axis=0))
    side = box.extent.max()
    if not side > 0:
        raise GeometryError("cannot normalize a zero-extent cloud")
    return PointCloud((pts - box.center) / side)


def surface_centroid(mesh: TriangleMesh) -> np.ndarray:
    """Area-weighted centroid of the mesh surface."""
    areas = mesh.face_areas()
    if not areas.sum() > 0:
        raise GeometryError("mesh has zero surface area")
    centers = mesh.vertices[mesh.faces].mean(axis=1)
    return areas @ centers / areas.sum()


def surface_extent(mesh: TriangleMesh) -> float:
    """Longest bounding-box side of the vertices referenced by faces."""
    used = mesh.vertices[np.unique(mesh.faces)]
    return float(np.ptp(used, axis=0).max())


def align_to_reference(
    pred: PointCloud,
    ref: PointCloud,
    *,
    center: np.ndarray | None = None,
    side: float | None = None,
) -> PointCloud:
    """Match ``pred``'s centroid and bounding-box max side to ``ref``'s.

    Translation followed by a uniform scale about the (shared) centroid. No
    rotation is estimated. ``center``/``side`` replace the statistics measured
    on ``pred`` when exact values are known (e.g. from the source mesh).
    """
    p = as_points(pred)
    r = as_points(ref)
    p_side = np.ptp(p, axis=0).max() if side is None else float(side)
    r_side = np.ptp(r, axis=0).max()
    if not (p_side > 0 and r_side > 0):
        raise GeometryError("cannot align zero-extent clouds")
    c_pred = p.mean(axis=0) if center is None else np.asarray(center, dtype=np.float64)
    moved = p - c_pred
    if p_side != r_side:
        moved = moved * (r_side / p_side)
    return PointCloud(moved + r.mean(axis=0))
