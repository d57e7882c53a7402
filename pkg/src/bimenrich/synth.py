"""Synthetic orthogonal apartments with analytic ground truth.

Layout: a grid of rooms. Walls running along x (one per grid line in y)
span the full building width; walls running along y are split into
segments between consecutive x-walls and butt against their faces. A
single floor slab lies under everything with its top at z = 0. Windows sit
in exterior walls, doors in interior walls plus one entrance door. Each
opening is a rectangular hole through the full wall thickness, filled by a
window or door box of equal width and height centered in the thickness.

Ground truth (classes, attributes, relations) is computed from the layout
parameters alone, never by measuring the generated meshes.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .attributes import AttributeMap
from .errors import DatasetError, SpecError
from .features import extract_features, features_to_csv
from .mesh import Mesh, box_mesh, rectilinear_solid, write_ply
from .relations import ADJACENT, HOSTED, HOSTING, Relation

QUANTUM = 1e-4  # construction parameters are rounded to 0.1 mm


def _q(x):
    return float(np.round(x / QUANTUM) * QUANTUM)


@dataclass(frozen=True)
class SceneSpec:
    seed: int = 0
    grid_x: tuple = (2, 4)
    grid_y: tuple = (2, 3)
    room_size: tuple = (2.8, 5.5)
    wall_thickness: tuple = (0.1, 0.3)
    wall_height: tuple = (2.6, 3.2)
    floor_thickness: tuple = (0.15, 0.35)
    windows_per_wall: tuple = (0, 2)
    window_width: tuple = (0.6, 1.8)
    window_height: tuple = (0.8, 1.4)
    sill_height: tuple = (0.6, 1.0)
    door_width: tuple = (0.8, 1.0)
    door_height: tuple = (2.0, 2.3)
    opening_depth_fraction: tuple = (0.4, 1.0)
    interior_door_probability: float = 0.7
    margin: float = 0.15
    origin_range: tuple = (0.0, 20.0)

    def __post_init__(self):
        self.validate()

    def validate(self):
        ranges = {k: v for k, v in asdict(self).items() if isinstance(v, (tuple, list))}
        for name, (lo, hi) in ranges.items():
            if lo > hi:
                raise SpecError(f"{name}: range {lo}..{hi} is not ordered")
            if name in ("windows_per_wall", "origin_range"):
                if lo < 0:
                    raise SpecError(f"{name}: negative bound")
            elif lo <= 0:
                raise SpecError(f"{name}: range must be positive")
        if self.grid_x[0] < 1 or self.grid_y[0] < 1:
            raise SpecError("room grid needs at least one room per axis")
        if self.opening_depth_fraction[1] > 1.0:
            raise SpecError("opening depth cannot exceed wall thickness")
        if not 0.0 <= self.interior_door_probability <= 1.0:
            raise SpecError("interior_door_probability must be in [0, 1]")
        if self.margin <= 0:
            raise SpecError("margin must be positive")
        shortest_wall = self.room_size[0] - 2 * self.margin
        if self.window_width[1] > shortest_wall:
            raise SpecError(
                f"window width up to {self.window_width[1]} m does not fit a "
                f"{self.room_size[0]} m wall with {self.margin} m margins"
            )
        if self.door_width[1] > shortest_wall:
            raise SpecError(
                f"door width up to {self.door_width[1]} m does not fit a "
                f"{self.room_size[0]} m wall with {self.margin} m margins"
            )
        lowest = self.wall_height[0] - self.margin
        if self.sill_height[1] + self.window_height[1] > lowest:
            raise SpecError("window head exceeds the lowest wall height minus margin")
        if self.door_height[1] > lowest:
            raise SpecError("door height exceeds the lowest wall height minus margin")


@dataclass
class GroundTruth:
    classes: dict
    attributes: dict
    relations: list

    def to_dict(self) -> dict:
        return {
            "objects": [
                {
                    "id": i,
                    "class": self.classes[i],
                    "attributes": dict(self.attributes[i].values),
                    "central_point": list(self.attributes[i].central_point),
                }
                for i in self.classes
            ],
            "relations": [[r.subject, r.predicate, r.object] for r in self.relations],
        }

    @classmethod
    def from_dict(cls, d) -> "GroundTruth":
        classes, attrs = {}, {}
        for o in d["objects"]:
            classes[o["id"]] = o["class"]
            attrs[o["id"]] = AttributeMap(dict(o["attributes"]), tuple(o["central_point"]))
        return cls(classes, attrs, sorted(Relation(*r) for r in d["relations"]))


@dataclass
class _Opening:
    kind: str
    u0: float
    u1: float
    z0: float
    z1: float
    depth: float


@dataclass
class _Wall:
    axis: int  # 0: runs along x, 1: runs along y
    u0: float
    u1: float
    v0: float
    v1: float
    height: float
    openings: list = field(default_factory=list)


def _uniform(rng, bounds):
    return _q(rng.uniform(bounds[0], bounds[1]))


def _place(rng, spec, lo, hi, widths):
    """Positions for openings of ``widths`` along ``[lo, hi]`` with margins.

    Openings that do not fit are dropped from the end of the list.
    """
    widths = list(widths)
    while widths and sum(widths) + (len(widths) + 1) * spec.margin > (hi - lo) + 1e-12:
        widths.pop()
    if not widths:
        return []
    slack = (hi - lo) - sum(widths) - (len(widths) + 1) * spec.margin
    shares = rng.random(len(widths) + 1)
    extra = [_q(slack * s / shares.sum()) for s in shares]
    out = []
    u = lo
    for w, e in zip(widths, extra):
        u = _q(u + spec.margin + e)
        out.append((u, _q(u + w)))
        u = _q(u + w)
    if out[-1][1] + spec.margin > hi + 1e-9:  # rounding pushed past the end
        shift = _q(out[-1][1] + spec.margin - hi)
        out = [(_q(a - shift), _q(b - shift)) for a, b in out]
    return out


def _wall_mesh(w: _Wall, origin) -> Mesh:
    us = {w.u0, w.u1}
    zs = {0.0, w.height}
    for o in w.openings:
        us.update((o.u0, o.u1))
        zs.update((o.z0, o.z1))
    us, zs = sorted(us), sorted(zs)
    vs = [w.v0, w.v1]
    solid = np.ones((len(us) - 1, 1, len(zs) - 1), dtype=bool)
    for o in w.openings:
        for i in range(len(us) - 1):
            if not (o.u0 <= us[i] and us[i + 1] <= o.u1):
                continue
            for k in range(len(zs) - 1):
                if o.z0 <= zs[k] and zs[k + 1] <= o.z1:
                    solid[i, 0, k] = False
    if w.axis == 0:
        mesh = rectilinear_solid(us, vs, zs, solid)
    else:
        mesh = rectilinear_solid(vs, us, zs, np.transpose(solid, (1, 0, 2)))
    return mesh.translated(origin)


def _storable(mesh: Mesh) -> Mesh:
    """Snap coordinates to the values an ASCII PLY round trip yields.

    Coordinates are multiples of the quantum, so this only removes float
    noise, and scenes loaded from disk equal the in-memory ones bit for bit.
    """
    snapped = np.array([float(f"{c:.9g}") for c in mesh.vertices.ravel()])
    return Mesh(snapped.reshape(-1, 3), mesh.triangles)


def _to_xyz(axis, u, v, z):
    return (u, v, z) if axis == 0 else (v, u, z)


def generate_scene(spec: SceneSpec):
    """Build one apartment.

    Returns ``(objects, truth)`` where ``objects`` is a list of
    ``(id, class, Mesh)`` and ``truth`` the analytic :class:`GroundTruth`.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    nx = int(rng.integers(spec.grid_x[0], spec.grid_x[1] + 1))
    ny = int(rng.integers(spec.grid_y[0], spec.grid_y[1] + 1))
    t = _uniform(rng, spec.wall_thickness)
    H = _uniform(rng, spec.wall_height)
    ft = _uniform(rng, spec.floor_thickness)
    a = [_uniform(rng, spec.room_size) for _ in range(nx)]
    b = [_uniform(rng, spec.room_size) for _ in range(ny)]
    origin = (_uniform(rng, spec.origin_range), _uniform(rng, spec.origin_range), 0.0)

    X = [0.0]
    for w in a:
        X.append(_q(X[-1] + t + w))
    Y = [0.0]
    for w in b:
        Y.append(_q(Y[-1] + t + w))
    W, D = _q(X[-1] + t), _q(Y[-1] + t)

    # x-walls: one per y grid line, full width; y-walls: segments between them
    x_walls = [_Wall(0, 0.0, W, Y[j], _q(Y[j] + t), H) for j in range(ny + 1)]
    y_walls = {
        (i, j): _Wall(1, _q(Y[j] + t), Y[j + 1], X[i], _q(X[i] + t), H)
        for i in range(nx + 1)
        for j in range(ny)
    }

    def window_sizes():
        n = int(rng.integers(spec.windows_per_wall[0], spec.windows_per_wall[1] + 1))
        return [_uniform(rng, spec.window_width) for _ in range(n)]

    def add(wall, kind, spans):
        for u0, u1 in spans:
            depth = _q(t * rng.uniform(*spec.opening_depth_fraction))
            depth = min(max(depth, QUANTUM), t)
            if kind == "window":
                z0 = _uniform(rng, spec.sill_height)
                z1 = _q(z0 + _uniform(rng, spec.window_height))
            else:
                z0, z1 = 0.0, _uniform(rng, spec.door_height)
            wall.openings.append(_Opening(kind, u0, u1, z0, z1, depth))

    for j, wall in enumerate(x_walls):
        exterior = j in (0, ny)
        for i in range(nx):
            lo, hi = _q(X[i] + t), X[i + 1]
            if j == 0 and i == 0:
                dw = _uniform(rng, spec.door_width)
                widths = [dw] + window_sizes()
                spans = _place(rng, spec, lo, hi, widths)
                add(wall, "door", spans[:1])
                add(wall, "window", spans[1:])
            elif exterior:
                add(wall, "window", _place(rng, spec, lo, hi, window_sizes()))
            elif rng.random() < spec.interior_door_probability:
                dw = _uniform(rng, spec.door_width)
                add(wall, "door", _place(rng, spec, lo, hi, [dw]))
    for (i, j), wall in y_walls.items():
        if i in (0, nx):
            add(wall, "window", _place(rng, spec, wall.u0, wall.u1, window_sizes()))
        elif rng.random() < spec.interior_door_probability:
            dw = _uniform(rng, spec.door_width)
            add(wall, "door", _place(rng, spec, wall.u0, wall.u1, [dw]))

    objects, classes, attrs, relations = [], {}, {}, []
    ox, oy, oz = origin

    def register(kind, mesh, attr_map):
        obj_id = str(len(objects) + 1)
        objects.append((obj_id, kind, _storable(mesh)))
        classes[obj_id] = kind
        attrs[obj_id] = attr_map
        return obj_id

    def link_adjacent(p, q):
        relations.extend([Relation(p, ADJACENT, q), Relation(q, ADJACENT, p)])

    wall_ids = {}
    all_walls = [("x", j, w) for j, w in enumerate(x_walls)]
    all_walls += [("y", key, w) for key, w in y_walls.items()]
    for tag, key, w in all_walls:
        length = _q(w.u1 - w.u0)
        cut = sum((o.u1 - o.u0) * (o.z1 - o.z0) for o in w.openings) * t
        cu, cv = (w.u0 + w.u1) / 2, (w.v0 + w.v1) / 2
        cx, cy, cz = _to_xyz(w.axis, cu, cv, H / 2)
        am = AttributeMap(
            {
                "height": H,
                "length": length,
                "thickness": t,
                "area": length * H,
                "volume": length * t * H - cut,
                "orientation": 0.0 if w.axis == 0 else 90.0,
            },
            (ox + cx, oy + cy, oz + cz),
        )
        wall_ids[(tag, key)] = register("wall", _wall_mesh(w, origin), am)

    floor_mesh = box_mesh((ox, oy, oz - ft), (ox + W, oy + D, oz))
    floor_id = register(
        "floor",
        floor_mesh,
        AttributeMap(
            {
                "thickness": ft,
                "area": W * D,
                "perimeter": 2 * (W + D),
                "slope": 0.0,
                "volume": W * D * ft,
                "length": max(W, D),
                "width": min(W, D),
                "orientation": 0.0 if W >= D else 90.0,
            },
            (ox + W / 2, oy + D / 2, oz - ft / 2),
        ),
    )

    for tag, key, w in all_walls:
        wid = wall_ids[(tag, key)]
        link_adjacent(wid, floor_id)
        if tag == "y":
            i, j = key
            link_adjacent(wid, wall_ids[("x", j)])
            link_adjacent(wid, wall_ids[("x", j + 1)])
        for o in w.openings:
            cv = (w.v0 + w.v1) / 2
            lo = _to_xyz(w.axis, o.u0, cv - o.depth / 2, o.z0)
            hi = _to_xyz(w.axis, o.u1, cv + o.depth / 2, o.z1)
            lo = (lo[0] + ox, lo[1] + oy, lo[2] + oz)
            hi = (hi[0] + ox, hi[1] + oy, hi[2] + oz)
            width = _q(o.u1 - o.u0)
            height = _q(o.z1 - o.z0)
            center = _to_xyz(w.axis, (o.u0 + o.u1) / 2, cv, (o.z0 + o.z1) / 2)
            am = AttributeMap(
                {"width": width, "depth": o.depth, "height": height},
                (center[0] + ox, center[1] + oy, center[2] + oz),
            )
            oid = register(o.kind, box_mesh(lo, hi), am)
            relations.extend([Relation(wid, HOSTING, oid), Relation(oid, HOSTED, wid)])
            if o.z0 == 0.0:
                link_adjacent(oid, floor_id)

    return objects, GroundTruth(classes, attrs, sorted(set(relations)))


# --- corpus -------------------------------------------------------------------

CORPUS_FORMAT = "bimenrich-corpus"
CORPUS_VERSION = 1

MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["format", "version", "spec", "scenes"],
    "properties": {
        "format": {"const": CORPUS_FORMAT},
        "version": {"const": CORPUS_VERSION},
        "units": {"const": "m"},
        "spec": {"type": "object"},
        "scenes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "seed", "objects", "relations"],
                "properties": {
                    "name": {"type": "string"},
                    "seed": {"type": "integer"},
                    "objects": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["id", "class", "file", "attributes", "central_point"],
                            "properties": {
                                "id": {"type": "string"},
                                "class": {"enum": ["wall", "floor", "window", "door"]},
                                "file": {"type": "string"},
                                "attributes": {
                                    "type": "object",
                                    "additionalProperties": {"type": "number"},
                                },
                                "central_point": {
                                    "type": "array",
                                    "items": {"type": "number"},
                                    "minItems": 3,
                                    "maxItems": 3,
                                },
                            },
                        },
                    },
                    "relations": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "minItems": 3,
                            "maxItems": 3,
                            "prefixItems": [
                                {"type": "string"},
                                {"enum": ["adjacentTo", "hosting", "hosted"]},
                                {"type": "string"},
                            ],
                        },
                    },
                },
            },
        },
    },
}


def validate_manifest(manifest: dict) -> None:
    """Raise :class:`DatasetError` if ``manifest`` does not match the schema."""
    import jsonschema

    try:
        jsonschema.Draft202012Validator(MANIFEST_SCHEMA).validate(manifest)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise DatasetError(f"manifest invalid at '{path}': {exc.message}") from None


def scene_seeds(seed: int, n: int) -> list:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def iter_scenes(spec: SceneSpec, n: int):
    """Yield ``(name, scene_spec, objects, truth)`` for ``n`` seeded scenes."""
    for k, s in enumerate(scene_seeds(spec.seed, n)):
        sub = SceneSpec(**{**asdict(spec), "seed": s})
        objects, truth = generate_scene(sub)
        yield f"scene_{k:03d}", sub, objects, truth


def write_scene(out_dir, name, seed, objects, truth) -> dict:
    """Write one scene's PLY files and ``scene.json``; returns its manifest entry."""
    scene_dir = Path(out_dir) / name
    scene_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    gt = truth.to_dict()["objects"]
    by_id = {o["id"]: o for o in gt}
    for obj_id, kind, mesh in objects:
        write_ply(mesh, scene_dir / f"{obj_id}.ply")
        entries.append({**by_id[obj_id], "file": f"{name}/{obj_id}.ply"})
    entry = {
        "name": name,
        "seed": seed,
        "objects": entries,
        "relations": [[r.subject, r.predicate, r.object] for r in truth.relations],
    }
    with open(scene_dir / "scene.json", "w") as fh:
        json.dump(entry, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return entry


def generate_corpus(spec: SceneSpec, n_scenes: int, out_dir) -> dict:
    """Write ``n_scenes`` scenes, ``manifest.json``, and a labeled ``features.csv``."""
    if n_scenes < 1:
        raise SpecError("corpus needs at least one scene")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenes, rows = [], []
    for name, sub, objects, truth in iter_scenes(spec, n_scenes):
        scenes.append(write_scene(out_dir, name, sub.seed, objects, truth))
        rows += [(f"{name}/{i}", kind, extract_features(m)) for i, kind, m in objects]
    manifest = {
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "units": "m",
        "spec": asdict(spec),
        "scenes": scenes,
    }
    validate_manifest(manifest)
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    features_to_csv(rows, out_dir / "features.csv")
    return manifest


def corpus_rows(spec: SceneSpec, n_scenes: int) -> list:
    """In-memory ``(id, label, FeatureVector)`` rows for a corpus, no files."""
    rows = []
    for name, _, objects, _ in iter_scenes(spec, n_scenes):
        rows += [(f"{name}/{i}", kind, extract_features(m)) for i, kind, m in objects]
    return rows
