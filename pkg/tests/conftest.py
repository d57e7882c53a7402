import numpy as np
import pytest

from bimenrich.mesh import Mesh, box_mesh
from bimenrich.records import ObjectRecord

CUBE_VERTICES = [
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
    (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
]
CUBE_QUADS = [
    (0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
    (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7),
]


def cube_triangles():
    tris = []
    for a, b, c, d in CUBE_QUADS:
        tris += [(a, b, c), (a, c, d)]
    return tris


def write_ascii_ply(path, vertices, faces, header_extra=(), end_header=True):
    lines = [
        "ply",
        "format ascii 1.0",
        *header_extra,
        f"element vertex {len(vertices)}",
        "property float x",
        "property float y",
        "property float z",
        f"element face {len(faces)}",
        "property list uchar int vertex_indices",
    ]
    if end_header:
        lines.append("end_header")
    lines += [" ".join(str(c) for c in v) for v in vertices]
    lines += [" ".join(str(i) for i in (len(f), *f)) for f in faces]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def unit_cube():
    return Mesh(np.array(CUBE_VERTICES, dtype=float), np.array(cube_triangles()))


def record(obj_id, lo, hi, obj_class=None):
    return ObjectRecord(obj_id, box_mesh(lo, hi), object_class=obj_class)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict: ``criterion(label, ok, detail)``."""

    def note(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return note


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
