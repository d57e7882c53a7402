"""Type-dependent dimensional attributes.

The same geometric extent is named differently per class: the vertical
extent of a wall is its height, of a floor slab its thickness. Class to
attribute table::

    wall          height, length, thickness, area (length * height),
                  volume, orientation
    floor         thickness, area (volume / thickness), perimeter, slope,
                  volume, length, width, orientation
    window, door  width, depth, height

Every object also gets ``central_point`` (bounding-box center).
``orientation`` is the azimuth of the long horizontal axis in degrees,
[0, 180). Lengths in m, areas m², volumes m³, angles degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError
from .mesh import Mesh, aabb, triangle_areas, volume

ATTRIBUTE_UNITS = {
    "height": "m",
    "width": "m",
    "length": "m",
    "thickness": "m",
    "depth": "m",
    "area": "m2",
    "perimeter": "m",
    "volume": "m3",
    "slope": "deg",
    "orientation": "deg",
}

CLASS_ATTRIBUTES = {
    "wall": ("area", "height", "length", "orientation", "thickness", "volume"),
    "floor": ("area", "length", "orientation", "perimeter", "slope", "thickness",
              "volume", "width"),
    "window": ("depth", "height", "width"),
    "door": ("depth", "height", "width"),
}

NON_AXIS_ALIGNED = "non_axis_aligned"

_EXTENT_EPS = 1e-9
_AXIS_TOL = 1e-9
_PARALLEL_TOL = 1e-6


@dataclass
class AttributeMap:
    values: dict
    central_point: tuple
    flags: tuple = field(default=())

    def __getitem__(self, name):
        if name == "central_point":
            return self.central_point
        return self.values[name]

    def __contains__(self, name):
        return name == "central_point" or name in self.values


def _unit_normals(mesh: Mesh):
    c = mesh.corners()
    n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    length = np.linalg.norm(n, axis=1)
    keep = length > 0
    return n[keep] / length[keep, None], triangle_areas(mesh)[keep]


def is_axis_aligned(mesh: Mesh) -> bool:
    """Every face normal points along a coordinate axis."""
    normals, _ = _unit_normals(mesh)
    return bool(np.all(np.abs(normals).max(axis=1) >= 1.0 - _AXIS_TOL))


def horizontal_extents(mesh: Mesh):
    """``(long, short, orientation_deg, flags)`` of the horizontal footprint.

    Axis-aligned meshes use the bounding box directly. Otherwise the long
    axis is the principal direction of the projected vertices and the
    result is flagged.
    """
    if is_axis_aligned(mesh):
        ex, ey, _ = aabb(mesh).extents
        # square footprints (up to rounding) count as running along x
        if ey <= ex * (1.0 + 1e-9):
            return max(ex, ey), min(ex, ey), 0.0, ()
        return ey, ex, 90.0, ()
    xy = mesh.vertices[:, :2] - mesh.vertices[:, :2].mean(axis=0)
    cov = xy.T @ xy
    theta = 0.5 * math.atan2(2.0 * cov[0, 1], cov[0, 0] - cov[1, 1])
    u = np.array([math.cos(theta), math.sin(theta)])
    v = np.array([-u[1], u[0]])
    pu, pv = xy @ u, xy @ v
    long_, short = float(np.ptp(pu)), float(np.ptp(pv))
    orient = math.degrees(theta)
    if short > long_:
        long_, short = short, long_
        orient += 90.0
    return long_, short, orient % 180.0, (NON_AXIS_ALIGNED,)


def slope_deg(mesh: Mesh) -> float:
    """Tilt from horizontal of the dominant planar face group.

    Faces are grouped by parallel normals (either sense); the group with the
    largest total area wins and its normal's angle to the vertical axis is
    returned, in [0, 90].
    """
    normals, areas = _unit_normals(mesh)
    order = np.argsort(-areas, kind="stable")
    groups = []  # [representative normal, area]
    for i in order:
        n = normals[i]
        for g in groups:
            if abs(float(n @ g[0])) >= 1.0 - _PARALLEL_TOL:
                g[1] += areas[i]
                break
        else:
            groups.append([n, float(areas[i])])
    if not groups:
        raise DegenerateGeometryError("mesh has no non-degenerate faces")
    # Near-equal groups (e.g. a square cross-section) resolve to the most
    # horizontal face so the result does not hinge on rounding noise.
    top = max(g[1] for g in groups)
    tied = [g for g in groups if g[1] >= top * (1.0 - 1e-9)]
    nz = min(1.0, max(abs(float(g[0][2])) for g in tied))
    return math.degrees(math.acos(nz))


def _require(extent, axis, obj_class):
    if extent < _EXTENT_EPS:
        raise DegenerateGeometryError(f"{obj_class} has zero extent along {axis}")
    return extent


def compute_attributes(record) -> AttributeMap:
    """Attribute map for a classified record (needs ``mesh`` and ``object_class``)."""
    mesh = record.mesh
    obj_class = record.object_class
    if obj_class not in CLASS_ATTRIBUTES:
        raise ValueError(f"no attribute table for class {obj_class!r}")
    box = aabb(mesh)
    ex, ey, ez = box.extents
    center = box.center
    long_, short, orient, flags = horizontal_extents(mesh)
    vol = volume(mesh)

    if obj_class == "wall":
        _require(ez, "z", obj_class)
        _require(long_, "length axis", obj_class)
        _require(short, "thickness axis", obj_class)
        values = {
            "height": ez,
            "length": long_,
            "thickness": short,
            "area": long_ * ez,
            "volume": vol,
            "orientation": orient,
        }
    elif obj_class == "floor":
        _require(ez, "z", obj_class)
        values = {
            "thickness": ez,
            "area": vol / ez,
            "perimeter": 2.0 * (ex + ey),
            "slope": slope_deg(mesh),
            "volume": vol,
            "length": long_,
            "width": short,
            "orientation": orient,
        }
    else:
        _require(long_, "width axis", obj_class)
        _require(short, "depth axis", obj_class)
        _require(ez, "z", obj_class)
        values = {"width": long_, "depth": short, "height": ez}
    return AttributeMap(values, tuple(center), tuple(flags))
