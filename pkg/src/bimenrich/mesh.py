"""Triangle meshes: PLY input/output and basic geometric measures.

Coordinates are meters in the global frame. Meshes are immutable; every
function here is pure.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyMeshError, MeshFormatError, MeshIndexError

__all__ = [
    "Aabb",
    "Mesh",
    "aabb",
    "box_mesh",
    "is_closed",
    "load_ply",
    "rectilinear_solid",
    "surface_area",
    "volume",
    "write_ply",
]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Indexed triangle soup.

    ``vertices`` is an ``(n, 3)`` float64 array, ``triangles`` an ``(m, 3)``
    int64 array of vertex indices.
    """

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise MeshFormatError("mesh has non-finite coordinates")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshIndexError(
                f"triangle index out of range for {len(v)} vertices"
            )
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def require_nonempty(self) -> "Mesh":
        if self.n_vertices < 3 or self.n_triangles < 1:
            raise EmptyMeshError(
                f"mesh has {self.n_vertices} vertices and "
                f"{self.n_triangles} triangles"
            )
        return self

    def corners(self) -> np.ndarray:
        """Triangle corner coordinates as an ``(m, 3, 3)`` array."""
        return self.vertices[self.triangles]

    def translated(self, offset) -> "Mesh":
        return Mesh(self.vertices + np.asarray(offset, dtype=float), self.triangles)

    def transformed(self, rotation, offset=(0.0, 0.0, 0.0)) -> "Mesh":
        r = np.asarray(rotation, dtype=float)
        return Mesh(self.vertices @ r.T + np.asarray(offset, dtype=float), self.triangles)

    def flipped(self) -> "Mesh":
        """Same surface with every triangle's winding reversed."""
        return Mesh(self.vertices, self.triangles[:, ::-1])

    def same_as(self, other: "Mesh") -> bool:
        return (
            self.vertices.shape == other.vertices.shape
            and self.triangles.shape == other.triangles.shape
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
        )


@dataclass(frozen=True)
class Aabb:
    min: tuple
    max: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in self.min)
        hi = tuple(float(x) for x in self.max)
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"invalid bounding box {lo} > {hi}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def extents(self) -> tuple:
        return tuple(b - a for a, b in zip(self.min, self.max))

    @property
    def center(self) -> tuple:
        return tuple((a + b) / 2.0 for a, b in zip(self.min, self.max))


def aabb(mesh: Mesh) -> Aabb:
    mesh.require_nonempty()
    return Aabb(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


def triangle_areas(mesh: Mesh) -> np.ndarray:
    c = mesh.corners()
    cross = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def surface_area(mesh: Mesh) -> float:
    return float(triangle_areas(mesh).sum())


def signed_volume(mesh: Mesh) -> float:
    """Divergence-theorem volume; positive for outward-wound closed meshes.

    Tetrahedra are anchored at the vertex mean rather than the world origin.
    For closed meshes the sum is the same, but cancellation error no longer
    grows with the distance from the origin.
    """
    c = mesh.corners() - mesh.vertices.mean(axis=0)
    det = np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2]))
    return float(det.sum() / 6.0)


def volume(mesh: Mesh) -> float:
    """Enclosed volume, insensitive to winding.

    Only meaningful when :func:`is_closed` holds; open meshes still get a
    number.
    """
    return abs(signed_volume(mesh))


def is_closed(mesh: Mesh) -> bool:
    """True when every directed edge is matched by exactly one reverse edge."""
    if mesh.n_triangles == 0:
        return False
    t = mesh.triangles
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    fwd, fwd_counts = np.unique(edges, axis=0, return_counts=True)
    if np.any(fwd_counts != 1):
        return False
    rev = np.unique(edges[:, ::-1], axis=0)
    return np.array_equal(fwd, rev)


# --- solid construction -----------------------------------------------------


def rectilinear_solid(xs, ys, zs, solid) -> Mesh:
    """Closed, outward-wound boundary of a union of grid cells.

    ``xs``, ``ys``, ``zs`` are strictly increasing breakpoints and ``solid``
    a boolean array of shape ``(len(xs)-1, len(ys)-1, len(zs)-1)``. Every
    boundary face is a single lattice rectangle, so the result has no
    T-junctions and passes :func:`is_closed`.
    """
    grids = [np.asarray(g, dtype=float) for g in (xs, ys, zs)]
    solid = np.asarray(solid, dtype=bool)
    shape = tuple(len(g) - 1 for g in grids)
    if solid.shape != shape:
        raise ValueError(f"solid mask shape {solid.shape} != {shape}")
    padded = np.zeros(tuple(n + 2 for n in shape), dtype=bool)
    padded[1:-1, 1:-1, 1:-1] = solid

    index = {}
    vertices = []
    triangles = []

    def vid(ijk):
        got = index.get(ijk)
        if got is None:
            got = index[ijk] = len(vertices)
            vertices.append([grids[0][ijk[0]], grids[1][ijk[1]], grids[2][ijk[2]]])
        return got

    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        step = [0, 0, 0]
        step[a] = 1
        for cell in zip(*np.nonzero(solid)):
            for sign in (1, -1):
                nb = [cell[k] + 1 + (step[k] * sign) for k in range(3)]
                if padded[tuple(nb)]:
                    continue
                plane = cell[a] + (1 if sign > 0 else 0)
                quad = []
                for db, dc in ((0, 0), (1, 0), (1, 1), (0, 1)):
                    ijk = [0, 0, 0]
                    ijk[a] = plane
                    ijk[b] = cell[b] + db
                    ijk[c] = cell[c] + dc
                    quad.append(vid(tuple(int(x) for x in ijk)))
                if sign < 0:
                    quad = quad[::-1]
                triangles.append([quad[0], quad[1], quad[2]])
                triangles.append([quad[0], quad[2], quad[3]])
    return Mesh(np.array(vertices, dtype=float), np.array(triangles, dtype=np.int64))


def box_mesh(lo, hi) -> Mesh:
    """Axis-aligned box with 8 vertices and 12 outward-wound triangles."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise ValueError(f"box needs positive extents, got {lo} .. {hi}")
    return rectilinear_solid(
        [lo[0], hi[0]], [lo[1], hi[1]], [lo[2], hi[2]], np.ones((1, 1, 1), bool)
    )


# --- PLY ----------------------------------------------------------------------

_PLY_TYPES = {
    "char": "b", "int8": "b",
    "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h",
    "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i",
    "uint": "I", "uint32": "I",
    "float": "f", "float32": "f",
    "double": "d", "float64": "d",
}
_FACE_LIST_NAMES = ("vertex_indices", "vertex_index")


@dataclass
class _Property:
    name: str
    type: str
    count_type: str | None = None  # set for list properties


@dataclass
class _Element:
    name: str
    count: int
    properties: list


def _parse_header(stream):
    first = stream.readline()
    if first.strip() != b"ply":
        raise MeshFormatError("missing 'ply' magic line")
    fmt = None
    elements = []
    while True:
        raw = stream.readline()
        if not raw:
            raise MeshFormatError("header ended without 'end_header'")
        try:
            words = raw.decode("ascii").split()
        except UnicodeDecodeError as exc:
            raise MeshFormatError("non-ASCII bytes in header") from exc
        if not words or words[0] in ("comment", "obj_info"):
            continue
        key = words[0]
        if key == "end_header":
            break
        if key == "format":
            if len(words) < 2 or words[1] not in ("ascii", "binary_little_endian"):
                raise MeshFormatError(f"unsupported format: {' '.join(words[1:])}")
            fmt = words[1]
        elif key == "element":
            if len(words) != 3:
                raise MeshFormatError(f"bad element line: {raw!r}")
            try:
                count = int(words[2])
            except ValueError as exc:
                raise MeshFormatError(f"bad element count: {words[2]}") from exc
            elements.append(_Element(words[1], count, []))
        elif key == "property":
            if not elements:
                raise MeshFormatError("property before any element")
            if len(words) == 5 and words[1] == "list":
                if words[2] not in _PLY_TYPES or words[3] not in _PLY_TYPES:
                    raise MeshFormatError(f"unknown list types in {raw!r}")
                prop = _Property(words[4], words[3], words[2])
            elif len(words) == 3 and words[1] in _PLY_TYPES:
                prop = _Property(words[2], words[1])
            else:
                raise MeshFormatError(f"bad property line: {raw!r}")
            elements[-1].properties.append(prop)
        else:
            raise MeshFormatError(f"unexpected header keyword {key!r}")
    if fmt is None:
        raise MeshFormatError("header has no format line")
    return fmt, elements


def _read_ascii(stream, elements):
    tokens = stream.read().decode("ascii", errors="replace").split()
    try:
        return _ascii_elements(tokens, elements)
    except (IndexError, ValueError) as exc:
        raise MeshFormatError(f"truncated or malformed ASCII body: {exc}") from exc


def _ascii_elements(tokens, elements):
    pos = 0
    data = {}
    for el in elements:
        rows = []
        for _ in range(el.count):
            row = []
            for prop in el.properties:
                if prop.count_type is not None:
                    n = int(tokens[pos])
                    row.append(tokens[pos + 1 : pos + 1 + n])
                    pos += 1 + n
                else:
                    row.append(tokens[pos])
                    pos += 1
            rows.append(row)
        if pos > len(tokens):
            raise IndexError(f"element {el.name!r} runs past end of data")
        data[el.name] = rows
    return data


def _read_binary(stream, elements):
    buf = stream.read()
    pos = 0
    data = {}
    try:
        for el in elements:
            if all(p.count_type is None for p in el.properties):
                dtype = np.dtype(
                    [(p.name, "<" + _PLY_TYPES[p.type]) for p in el.properties]
                )
                arr = np.frombuffer(buf, dtype=dtype, count=el.count, offset=pos)
                pos += dtype.itemsize * el.count
                data[el.name] = [[row[p.name] for p in el.properties] for row in arr]
                continue
            rows = []
            for _ in range(el.count):
                row = []
                for prop in el.properties:
                    if prop.count_type is not None:
                        cfmt = "<" + _PLY_TYPES[prop.count_type]
                        (n,) = struct.unpack_from(cfmt, buf, pos)
                        pos += struct.calcsize(cfmt)
                        ifmt = f"<{n}{_PLY_TYPES[prop.type]}"
                        row.append(list(struct.unpack_from(ifmt, buf, pos)))
                        pos += struct.calcsize(ifmt)
                    else:
                        vfmt = "<" + _PLY_TYPES[prop.type]
                        (v,) = struct.unpack_from(vfmt, buf, pos)
                        pos += struct.calcsize(vfmt)
                        row.append(v)
                rows.append(row)
            data[el.name] = rows
    except (struct.error, ValueError) as exc:
        raise MeshFormatError(f"truncated binary data: {exc}") from exc
    return data


def load_ply(path) -> Mesh:
    """Read an ASCII or binary little-endian PLY file.

    Polygon faces are fan-triangulated from their first vertex.

    Raises:
        MeshFormatError: malformed header or body.
        MeshIndexError: a face index outside the vertex list.
        EmptyMeshError: no vertices or no faces.
    """
    with open(path, "rb") as stream:
        fmt, elements = _parse_header(stream)
        by_name = {el.name: el for el in elements}
        vert_el = by_name.get("vertex")
        face_el = by_name.get("face")
        if vert_el is None or face_el is None:
            raise EmptyMeshError("PLY lacks a vertex or face element")
        names = [p.name for p in vert_el.properties]
        for axis in "xyz":
            if axis not in names:
                raise MeshFormatError(f"vertex element lacks property {axis!r}")
        face_names = [p.name for p in face_el.properties]
        list_name = next((n for n in _FACE_LIST_NAMES if n in face_names), None)
        if list_name is None:
            raise MeshFormatError("face element lacks a vertex_indices list")
        if fmt == "ascii":
            data = _read_ascii(stream, elements)
        else:
            data = _read_binary(stream, elements)

    xi, yi, zi = (names.index(a) for a in "xyz")
    try:
        verts = np.array(
            [[float(r[xi]), float(r[yi]), float(r[zi])] for r in data["vertex"]],
            dtype=float,
        ).reshape(-1, 3)
    except (TypeError, ValueError) as exc:
        raise MeshFormatError(f"bad vertex coordinate: {exc}") from exc
    li = face_names.index(list_name)
    tris = []
    for row in data["face"]:
        try:
            poly = [int(i) for i in row[li]]
        except (TypeError, ValueError) as exc:
            raise MeshFormatError(f"bad face index: {exc}") from exc
        if len(poly) < 3:
            raise MeshFormatError(f"face with {len(poly)} vertices")
        for k in range(1, len(poly) - 1):
            tris.append((poly[0], poly[k], poly[k + 1]))
    if len(verts) == 0 or not tris:
        raise EmptyMeshError(f"{path}: empty vertex or face list")
    tri_arr = np.array(tris, dtype=np.int64)
    if tri_arr.min() < 0 or tri_arr.max() >= len(verts):
        raise MeshIndexError(
            f"{path}: face index {int(tri_arr.max())} out of range "
            f"for {len(verts)} vertices"
        )
    return Mesh(verts, tri_arr).require_nonempty()


def write_ply(mesh: Mesh, path, binary: bool = False) -> None:
    """Write ``mesh`` as PLY.

    ASCII output carries 9 significant digits per coordinate; binary output
    stores float64 and round-trips bit-exactly.
    """
    mesh.require_nonempty()
    header = [
        "ply",
        "format binary_little_endian 1.0" if binary else "format ascii 1.0",
        f"element vertex {mesh.n_vertices}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {mesh.n_triangles}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    head = ("\n".join(header) + "\n").encode("ascii")
    path = Path(path)
    with open(path, "wb") as out:
        out.write(head)
        if binary:
            out.write(mesh.vertices.astype("<f8").tobytes())
            faces = np.zeros(
                mesh.n_triangles, dtype=[("n", "u1"), ("idx", "<i4", (3,))]
            )
            faces["n"] = 3
            faces["idx"] = mesh.triangles
            out.write(faces.tobytes())
        else:
            lines = [f"{x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
            lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
            out.write(("\n".join(lines) + "\n").encode("ascii"))
