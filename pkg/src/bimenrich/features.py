"""Per-object geometric feature vectors for classification.

Nineteen scalars in three groups: dimensions (AABB extents), locations
(AABB corners and vertex centroid), and mesh characteristics (area,
volume, counts, plus three dimensionless shape ratios).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .mesh import Mesh, aabb, is_closed, surface_area, volume

EPS = 1e-9

FEATURE_NAMES = (
    "extent_x",
    "extent_y",
    "extent_z",
    "min_x",
    "min_y",
    "min_z",
    "max_x",
    "max_y",
    "max_z",
    "centroid_x",
    "centroid_y",
    "centroid_z",
    "surface_area",
    "volume",
    "face_count",
    "vertex_count",
    "extent_ratio_max_min",
    "vertical_ratio",
    "aabb_fill",
)
N_FEATURES = len(FEATURE_NAMES)

LOCATION_FEATURES = tuple(
    n for n in FEATURE_NAMES if n.startswith(("min_", "max_", "centroid_"))
)
SHAPE_FEATURES = tuple(n for n in FEATURE_NAMES if n not in LOCATION_FEATURES)


@dataclass(frozen=True)
class FeatureVector:
    values: tuple
    degenerate: bool = False
    volume_reliable: bool = True

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} features, got {len(vals)}")
        object.__setattr__(self, "values", vals)

    def __getitem__(self, name: str) -> float:
        return self.values[FEATURE_NAMES.index(name)]

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.values))


def extract_features(mesh: Mesh) -> FeatureVector:
    box = aabb(mesh)
    ext = np.array(box.extents)
    centroid = mesh.vertices.mean(axis=0)
    area = surface_area(mesh)
    vol = volume(mesh)

    degenerate = bool(np.any(ext < EPS))
    ratio = ext.max() / max(ext.min(), EPS)
    vertical = ext[2] / max(ext[0], ext[1], EPS)
    fill = vol / max(float(np.prod(ext)), EPS)

    values = (
        *ext,
        *box.min,
        *box.max,
        *centroid,
        area,
        vol,
        mesh.n_triangles,
        mesh.n_vertices,
        ratio,
        vertical,
        fill,
    )
    return FeatureVector(values, degenerate=degenerate, volume_reliable=is_closed(mesh))


def features_to_csv(rows, path) -> None:
    """Write ``(object_id, label_or_None, FeatureVector)`` rows.

    Floats use ``repr`` so a reload reproduces them exactly.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", *FEATURE_NAMES])
        for obj_id, label, fv in rows:
            writer.writerow([obj_id, label or "", *(repr(v) for v in fv.values)])


def features_from_csv(path) -> list:
    """Inverse of :func:`features_to_csv`; empty labels come back as None."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["id", "label"] or tuple(header[2:]) != FEATURE_NAMES:
            raise ValueError(f"{path}: unexpected feature CSV header")
        for line in reader:
            if not line:
                continue
            rows.append((line[0], line[1] or None, FeatureVector(float(v) for v in line[2:])))
    return rows
