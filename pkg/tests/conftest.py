import numpy as np
import pytest

from sketchmod.geometry_io import TriangleMesh


def unit_cube_mesh(side: float = 1.0) -> TriangleMesh:
    v = np.array(
        [[x, y, z] for x in (0, side) for y in (0, side) for z in (0, side)], dtype=float
    )
    quads = [
        (0, 1, 3, 2), (4, 6, 7, 5),  # x = 0, x = side
        (0, 4, 5, 1), (2, 3, 7, 6),  # y = 0, y = side
        (0, 2, 6, 4), (1, 5, 7, 3),  # z = 0, z = side
    ]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return TriangleMesh(v, np.array(faces))


@pytest.fixture
def cube():
    return unit_cube_mesh()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """``record(number, title, ok, detail)`` prints one PASS/FAIL line and fails the test if needed."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
