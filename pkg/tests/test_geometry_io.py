import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from sketchmod.geometry_io import (
    GeometryError,
    ObjParseError,
    PointCloud,
    TriangleMesh,
    align_to_reference,
    load_obj,
    normalize_unit,
    parse_obj,
    read_points,
    sample_surface,
    write_obj,
    write_points,
)


def tri_area(a, b, c):
    return 0.5 * np.linalg.norm(np.cross(np.subtract(b, a), np.subtract(c, a)))


def test_minimal_obj(tmp_path):
    p = tmp_path / "t.obj"
    p.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    mesh = load_obj(p)
    assert mesh.faces.tolist() == [[0, 1, 2]]
    assert mesh.vertices.shape == (3, 3)


def test_obj_index_out_of_range_reports_line():
    with pytest.raises(ObjParseError, match="line 4"):
        parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n")


def test_obj_empty_mesh():
    with pytest.raises(GeometryError):
        parse_obj("v 0 0 0\n# nothing else\n")


def test_obj_bad_vertex_line_number():
    with pytest.raises(ObjParseError, match="line 2"):
        parse_obj("v 0 0 0\nv 1 zero 0\n")


def test_quad_fan_triangulation_preserves_area():
    quad = [(0, 0, 0), (2, 0, 0), (2.5, 1, 0), (0, 1.5, 0)]
    text = "".join(f"v {x} {y} {z}\n" for x, y, z in quad) + "f 1 2 3 4\n"
    mesh = parse_obj(text)
    assert mesh.faces.tolist() == [[0, 1, 2], [0, 2, 3]]
    # shoelace formula for the convex quad
    xs = np.array([p[0] for p in quad])
    ys = np.array([p[1] for p in quad])
    shoelace = 0.5 * abs(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1)))
    assert mesh.area == pytest.approx(shoelace, abs=1e-12)


def test_obj_slash_and_negative_indices():
    mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf -3/1 -2/1/1 -1//1\n")
    assert mesh.faces.tolist() == [[0, 1, 2]]


def test_obj_roundtrip(tmp_path, cube):
    p = tmp_path / "c.obj"
    write_obj(cube, p)
    back = load_obj(p)
    np.testing.assert_array_equal(back.vertices, cube.vertices)
    np.testing.assert_array_equal(back.faces, cube.faces)


def test_mesh_rejects_bad_index():
    with pytest.raises(GeometryError):
        TriangleMesh(np.zeros((3, 3)), [[0, 1, 3]])


def test_point_cloud_invariants():
    with pytest.raises(GeometryError):
        PointCloud(np.zeros((0, 3)))
    with pytest.raises(GeometryError):
        PointCloud([[0, 0, np.nan]])
    assert PointCloud(np.zeros((4, 3))).count == 4


def test_unit_square_binomial_split():
    square = TriangleMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2], [0, 2, 3]])
    _, faces = sample_surface(square, 10_000, seed=7, return_faces=True)
    counts = np.bincount(faces, minlength=2)
    sigma = np.sqrt(10_000 * 0.25)
    assert np.all(np.abs(counts - 5000) <= 3 * sigma)


def test_single_triangle_point_is_inside():
    a, b, c = np.array([0.0, 0, 0]), np.array([2.0, 0, 1]), np.array([0.5, 3, 0])
    mesh = TriangleMesh([a, b, c], [[0, 1, 2]])
    p = sample_surface(mesh, 1, seed=3).points[0]
    # barycentric coordinates by least squares on the triangle's plane
    m = np.stack([b - a, c - a], axis=1)
    uv, *_ = np.linalg.lstsq(m, p - a, rcond=None)
    bary = np.array([1 - uv.sum(), *uv])
    assert np.all(bary >= -1e-12) and bary.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(a + m @ uv, p, atol=1e-12)


def test_sampling_deterministic(cube):
    a = sample_surface(cube, 500, seed=11)
    b = sample_surface(cube, 500, seed=11)
    np.testing.assert_array_equal(a.points, b.points)


def test_zero_area_mesh_rejected():
    flat = TriangleMesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    with pytest.raises(GeometryError):
        sample_surface(flat, 10, seed=0)


def test_triangle_frequencies_chi_square():
    rng = np.random.default_rng(5)
    verts = rng.normal(size=(30, 3))
    faces = np.array([rng.choice(30, 3, replace=False) for _ in range(20)])
    mesh = TriangleMesh(verts, faces)
    areas = np.array([tri_area(*verts[f]) for f in faces])
    _, idx = sample_surface(mesh, 100_000, seed=99, return_faces=True)
    observed = np.bincount(idx, minlength=len(faces))
    expected = areas / areas.sum() * 100_000
    assert stats.chisquare(observed, expected).pvalue > 0.001


def test_samples_lie_on_cube_surface(cube):
    pts = sample_surface(cube, 2000, seed=1).points
    on_face = np.isclose(pts, 0.0, atol=1e-12) | np.isclose(pts, 1.0, atol=1e-12)
    assert np.all(on_face.any(axis=1))
    assert np.all((pts >= -1e-12) & (pts <= 1 + 1e-12))


def test_normalize_cube_corners():
    corners = np.array([[x, y, z] for x in (3, 5) for y in (-1, 1) for z in (0, 2)], float)
    out = normalize_unit(PointCloud(corners)).points
    np.testing.assert_allclose(np.ptp(out, axis=0), [1, 1, 1])
    np.testing.assert_allclose(0.5 * (out.min(0) + out.max(0)), 0, atol=1e-15)


def test_normalize_box_4_2_1():
    box = np.array([[x, y, z] for x in (0, 4) for y in (0, 2) for z in (0, 1)], float)
    out = normalize_unit(PointCloud(box)).points
    np.testing.assert_allclose(np.ptp(out, axis=0), [1, 0.5, 0.25])


def test_normalize_degenerate():
    with pytest.raises(GeometryError):
        normalize_unit(PointCloud(np.ones((5, 3))))


finite_clouds = arrays(
    np.float64,
    st.tuples(st.integers(2, 40), st.just(3)),
    elements=st.floats(-100, 100, allow_nan=False, width=64),
).filter(lambda a: np.ptp(a, axis=0).max() > 1e-3)


@settings(max_examples=100, deadline=None)
@given(finite_clouds)
def test_normalize_idempotent(pts):
    once = normalize_unit(PointCloud(pts))
    twice = normalize_unit(once)
    np.testing.assert_allclose(twice.points, once.points, atol=1e-12, rtol=0)
    assert np.ptp(once.points, axis=0).max() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(finite_clouds)
def test_align_self_is_identity(pts):
    out = align_to_reference(PointCloud(pts), PointCloud(pts))
    np.testing.assert_allclose(out.points, pts, atol=1e-12, rtol=0)


def test_align_pure_translation(rng):
    ref = rng.normal(size=(50, 3))
    out = align_to_reference(PointCloud(ref + [1, 0, 0]), PointCloud(ref))
    np.testing.assert_allclose(out.points, ref, atol=1e-12)


def test_align_pure_scale(rng):
    ref = rng.normal(size=(50, 3))
    out = align_to_reference(PointCloud(2 * ref), PointCloud(ref)).points
    np.testing.assert_allclose(np.ptp(out, axis=0), np.ptp(ref, axis=0), atol=1e-12)
    np.testing.assert_allclose(out, ref, atol=1e-12)


def test_align_does_not_undo_rotation(rng):
    # symmetric bounding box so the 90 degree turn keeps the box sides
    ref = rng.uniform(-1, 1, size=(200, 3))
    ref = np.vstack([ref, [[1, 1, 1], [-1, -1, -1]]])
    rot = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], float)
    out = align_to_reference(PointCloud(ref @ rot.T), PointCloud(ref)).points
    np.testing.assert_allclose(out.mean(0), ref.mean(0), atol=1e-12)
    assert np.ptp(out, axis=0).max() == pytest.approx(np.ptp(ref, axis=0).max())
    assert np.abs(out - ref).max() > 0.1


@pytest.mark.parametrize("suffix", [".xyz", ".bin"])
def test_point_file_roundtrip(tmp_path, rng, suffix):
    pts = rng.normal(size=(17, 3))
    path = tmp_path / f"cloud{suffix}"
    write_points(PointCloud(pts), path)
    np.testing.assert_array_equal(read_points(path).points, pts)
