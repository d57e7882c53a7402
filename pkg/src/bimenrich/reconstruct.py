"""Rebuild a model from its knowledge graph alone.

:func:`plan_from_graph` reads object types, hosting edges and attributes
and emits creation commands (walls, then floors, then hosted windows and
doors). :func:`realize` turns a plan into meshes, cutting a rectangular
opening in the host wall for every hosted object. :func:`compare_scenes`
pairs original and rebuilt objects by class and position; ids are not
expected to survive.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AttributeMissingError, GeometryError, PlanError
from .graph import BimGraph, query_host
from .mesh import aabb, box_mesh, rectilinear_solid

PLAN_FORMAT = "bimenrich-plan"
PLAN_VERSION = 1

_SNAP = 1e-9


@dataclass(frozen=True)
class CreateWall:
    id: str
    start: tuple
    end: tuple
    height: float
    thickness: float
    op: str = "create_wall"


@dataclass(frozen=True)
class CreateFloor:
    id: str
    footprint_min: tuple
    footprint_max: tuple
    top_z: float
    thickness: float
    op: str = "create_floor"


@dataclass(frozen=True)
class PlaceHosted:
    id: str
    kind: str
    host: str
    center: tuple
    width: float
    height: float
    depth: float
    op: str = "place_hosted"


_OPS = {"create_wall": CreateWall, "create_floor": CreateFloor, "place_hosted": PlaceHosted}


@dataclass
class ReconstructionPlan:
    commands: list

    def __post_init__(self):
        walls = set()
        seen_hosted = False
        for cmd in self.commands:
            if isinstance(cmd, PlaceHosted):
                seen_hosted = True
                if cmd.host not in walls:
                    raise PlanError(f"{cmd.id} is placed before its host wall {cmd.host}")
            elif seen_hosted:
                raise PlanError(f"{cmd.id} follows a hosted placement")
            if isinstance(cmd, CreateWall):
                walls.add(cmd.id)

    def to_json(self) -> str:
        doc = {
            "format": PLAN_FORMAT,
            "version": PLAN_VERSION,
            "units": "m",
            "commands": [asdict(c) for c in self.commands],
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReconstructionPlan":
        doc = json.loads(text)
        if doc.get("format") != PLAN_FORMAT or doc.get("version") != PLAN_VERSION:
            raise PlanError("not a version-1 bimenrich plan")
        if doc.get("units") != "m":
            raise PlanError(f"unsupported plan units {doc.get('units')!r}")
        commands = []
        for c in doc["commands"]:
            kind = _OPS.get(c.get("op"))
            if kind is None:
                raise PlanError(f"unknown plan command {c.get('op')!r}")
            fields = {k: tuple(v) if isinstance(v, list) else v for k, v in c.items()}
            commands.append(kind(**fields))
        return cls(commands)


# --- graph -> plan ------------------------------------------------------------


def _attr(node, name):
    attrs = node.attributes
    if name == "central_point":
        return attrs.central_point
    if name not in attrs.values:
        raise AttributeMissingError(f"{node.name} lacks attribute {name!r}")
    return attrs.values[name]


def _axis_direction(node):
    orient = _attr(node, "orientation") % 180.0
    if orient == 0.0:
        return np.array([1.0, 0.0])
    if orient == 90.0:
        return np.array([0.0, 1.0])
    rad = math.radians(orient)
    return np.array([math.cos(rad), math.sin(rad)])


def plan_from_graph(graph: BimGraph) -> ReconstructionPlan:
    """Creation commands for every node; fresh ids ``r1``, ``r2``, ...

    Wall centerlines run along the length axis at mid-thickness with their
    base at the bottom of the wall.
    """
    by_class = {"wall": [], "floor": [], "window": [], "door": []}
    for name, node in graph.nodes.items():
        by_class[node.object_class].append(node)
    new_id = {}

    def fresh(name):
        new_id[name] = f"r{len(new_id) + 1}"
        return new_id[name]

    commands = []
    for node in by_class["wall"]:
        cx, cy, cz = _attr(node, "central_point")
        length = _attr(node, "length")
        height = _attr(node, "height")
        d = _axis_direction(node) * (length / 2.0)
        base = cz - height / 2.0
        commands.append(
            CreateWall(
                fresh(node.name),
                (cx - d[0], cy - d[1], base),
                (cx + d[0], cy + d[1], base),
                height,
                _attr(node, "thickness"),
            )
        )
    for node in by_class["floor"]:
        cx, cy, cz = _attr(node, "central_point")
        thickness = _attr(node, "thickness")
        length, width = _attr(node, "length"), _attr(node, "width")
        orient = _attr(node, "orientation") % 180.0
        if orient == 0.0:
            hx, hy = length / 2.0, width / 2.0
        elif orient == 90.0:
            hx, hy = width / 2.0, length / 2.0
        else:
            raise PlanError(f"{node.name}: only axis-aligned floor footprints are supported")
        commands.append(
            CreateFloor(
                fresh(node.name), (cx - hx, cy - hy), (cx + hx, cy + hy),
                cz + thickness / 2.0, thickness,
            )
        )
    for kind in ("door", "window"):
        for node in by_class[kind]:
            host = query_host(graph, node.name)
            if host is None:
                raise PlanError(f"{node.name} has no host wall")
            if graph.nodes[host].object_class != "wall":
                raise PlanError(f"{node.name} is hosted by non-wall {host}")
            commands.append(
                PlaceHosted(
                    fresh(node.name), kind, new_id[host],
                    tuple(_attr(node, "central_point")),
                    _attr(node, "width"), _attr(node, "height"), _attr(node, "depth"),
                )
            )
    return ReconstructionPlan(commands)


# --- plan -> meshes -----------------------------------------------------------


def _snap(values):
    """Sorted breakpoints with near-duplicates merged."""
    out = []
    for v in sorted(values):
        if out and v - out[-1] <= _SNAP:
            continue
        out.append(v)
    return out


def _nearest(breaks, v):
    return min(breaks, key=lambda b: abs(b - v))


def _wall_frame(cmd: CreateWall):
    start, end = np.array(cmd.start, float), np.array(cmd.end, float)
    if abs(start[2] - end[2]) > _SNAP:
        raise GeometryError(f"{cmd.id}: sloped wall centerline")
    if abs(start[1] - end[1]) <= _SNAP:
        axis = 0
    elif abs(start[0] - end[0]) <= _SNAP:
        axis = 1
    else:
        raise GeometryError(f"{cmd.id}: only axis-aligned walls can be realized")
    u0, u1 = sorted((start[axis], end[axis]))
    v = start[1 - axis]
    return axis, u0, u1, v - cmd.thickness / 2.0, v + cmd.thickness / 2.0, start[2]


def realize(plan: ReconstructionPlan) -> list:
    """Meshes for every plan command as ``(id, class, Mesh)``."""
    walls = {c.id: c for c in plan.commands if isinstance(c, CreateWall)}
    hosted = {}
    for c in plan.commands:
        if isinstance(c, PlaceHosted):
            hosted.setdefault(c.host, []).append(c)
    out = []
    placed = {}
    for wid, cmd in walls.items():
        axis, u0, u1, v0, v1, z0 = _wall_frame(cmd)
        z1 = z0 + cmd.height
        holes = []
        for h in hosted.get(wid, []):
            cu, cv, cz = h.center[axis], h.center[1 - axis], h.center[2]
            box = (cu - h.width / 2, cu + h.width / 2, cz - h.height / 2, cz + h.height / 2,
                   cv - h.depth / 2, cv + h.depth / 2)
            if (box[0] < u0 - _SNAP or box[1] > u1 + _SNAP or box[2] < z0 - _SNAP
                    or box[3] > z1 + _SNAP or box[4] < v0 - _SNAP or box[5] > v1 + _SNAP):
                raise GeometryError(f"{h.id} does not fit inside host wall {wid}")
            holes.append((h, box))
        us = _snap([u0, u1, *(b[i] for _, b in holes for i in (0, 1))])
        zs = _snap([z0, z1, *(b[i] for _, b in holes for i in (2, 3))])
        solid = np.ones((len(us) - 1, 1, len(zs) - 1), dtype=bool)
        for h, b in holes:
            a0, a1 = _nearest(us, b[0]), _nearest(us, b[1])
            c0, c1 = _nearest(zs, b[2]), _nearest(zs, b[3])
            for i in range(len(us) - 1):
                for k in range(len(zs) - 1):
                    if a0 <= us[i] and us[i + 1] <= a1 and c0 <= zs[k] and zs[k + 1] <= c1:
                        if not solid[i, 0, k]:
                            raise GeometryError(f"opening for {h.id} overlaps another opening")
                        solid[i, 0, k] = False
            lo, hi = [0.0] * 3, [0.0] * 3
            lo[axis], hi[axis] = a0, a1
            lo[1 - axis], hi[1 - axis] = max(b[4], v0), min(b[5], v1)
            lo[2], hi[2] = c0, c1
            placed[h.id] = (h.kind, box_mesh(lo, hi))
        if axis == 0:
            mesh = rectilinear_solid(us, [v0, v1], zs, solid)
        else:
            mesh = rectilinear_solid([v0, v1], us, zs, np.transpose(solid, (1, 0, 2)))
        out.append((wid, "wall", mesh))
    for c in plan.commands:
        if isinstance(c, CreateFloor):
            lo = (c.footprint_min[0], c.footprint_min[1], c.top_z - c.thickness)
            hi = (c.footprint_max[0], c.footprint_max[1], c.top_z)
            out.append((c.id, "floor", box_mesh(lo, hi)))
        elif isinstance(c, PlaceHosted):
            kind, mesh = placed[c.id]
            out.append((c.id, kind, mesh))
    return out


# --- comparison ---------------------------------------------------------------


@dataclass
class ObjectMatch:
    original_id: str
    reconstructed_id: str
    object_class: str
    center_delta: float
    extent_delta: tuple


@dataclass
class ComparisonReport:
    tol: float
    matches: list = field(default_factory=list)
    unmatched_original: list = field(default_factory=list)
    unmatched_reconstructed: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.unmatched_original and not self.unmatched_reconstructed

    @property
    def max_center_delta(self) -> float:
        return max((m.center_delta for m in self.matches), default=0.0)

    @property
    def max_extent_delta(self) -> float:
        return max((max(m.extent_delta) for m in self.matches), default=0.0)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "matched": len(self.matches),
            "max_center_delta": self.max_center_delta,
            "max_extent_delta": self.max_extent_delta,
            "unmatched_original": list(self.unmatched_original),
            "unmatched_reconstructed": list(self.unmatched_reconstructed),
            "matches": [asdict(m) for m in self.matches],
        }

    def to_text(self) -> str:
        lines = [
            f"{'PASS' if self.passed else 'FAIL'}: {len(self.matches)} objects matched "
            f"(tol {self.tol:g} m, max center delta {self.max_center_delta:.3g} m, "
            f"max extent delta {self.max_extent_delta:.3g} m)"
        ]
        if self.unmatched_original:
            lines.append("  unmatched original: " + ", ".join(self.unmatched_original))
        if self.unmatched_reconstructed:
            lines.append("  unmatched reconstructed: " + ", ".join(self.unmatched_reconstructed))
        return "\n".join(lines)


def compare_scenes(original, reconstructed, tol: float = 1e-3) -> ComparisonReport:
    """Pair objects by class and nearest bounding-box center.

    Candidate pairs are taken greedily in order of center distance; a pair
    is accepted only if the center distance and every extent difference are
    within ``tol``. Ids play no part in matching.
    """
    def boxes(scene):
        out = []
        for obj_id, kind, mesh in scene:
            b = aabb(mesh)
            out.append((str(obj_id), kind, np.array(b.center), np.array(b.extents)))
        return out

    orig, recon = boxes(original), boxes(reconstructed)
    candidates = []
    for i, (oid, ok, oc, oe) in enumerate(orig):
        for j, (rid, rk, rc, re_) in enumerate(recon):
            if ok != rk:
                continue
            dc = float(np.linalg.norm(oc - rc))
            de = tuple(float(x) for x in np.abs(oe - re_))
            if dc <= tol and max(de) <= tol:
                candidates.append((dc, i, j, de))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    used_o, used_r = set(), set()
    report = ComparisonReport(tol)
    for dc, i, j, de in candidates:
        if i in used_o or j in used_r:
            continue
        used_o.add(i)
        used_r.add(j)
        report.matches.append(ObjectMatch(orig[i][0], recon[j][0], orig[i][1], dc, de))
    report.matches.sort(key=lambda m: m.original_id)
    report.unmatched_original = sorted(orig[i][0] for i in range(len(orig)) if i not in used_o)
    report.unmatched_reconstructed = sorted(
        recon[j][0] for j in range(len(recon)) if j not in used_r
    )
    return report
