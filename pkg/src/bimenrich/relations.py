"""Rule-based adjacency and hosting relations between building objects.

A pair is examined in three stages, cheapest first:

1. the per-axis bounding-box gaps must sum to (almost) zero;
2. the exact minimum distance between the two surfaces must be (almost)
   zero, and neither mesh may penetrate the other;
3. the boxes decide the predicate: the container hosts the contained
   object, any other touching pair is adjacent.
"""

from __future__ import annotations

import csv
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import IdCollisionError
from .mesh import Aabb, Mesh

log = logging.getLogger(__name__)

ADJACENT = "adjacentTo"
HOSTING = "hosting"
HOSTED = "hosted"
PREDICATES = (ADJACENT, HOSTED, HOSTING)


@dataclass(frozen=True, order=True)
class Relation:
    subject: str
    predicate: str
    object: str

    def __post_init__(self):
        if self.predicate not in PREDICATES:
            raise ValueError(f"unknown predicate {self.predicate!r}")
        if self.subject == self.object:
            raise ValueError(f"self-relation on {self.subject!r}")


@dataclass(frozen=True)
class RelationConfig:
    eps_gap: float = 1e-6
    eps_contact: float = 1e-3
    eps_contain: float = 1e-3

    def __post_init__(self):
        if min(self.eps_gap, self.eps_contact, self.eps_contain) < 0:
            raise ValueError("relation tolerances must be >= 0")


def aabb_gap(a: Aabb, b: Aabb) -> tuple:
    """Per-axis separation of two boxes and its sum; zero where they overlap."""
    gaps = tuple(
        max(0.0, a.min[i] - b.max[i], b.min[i] - a.max[i]) for i in range(3)
    )
    return (*gaps, sum(gaps))


def contains(a: Aabb, b: Aabb, eps: float) -> bool:
    """True when box ``a`` encloses box ``b`` up to ``eps`` on every axis."""
    return all(
        a.min[i] - eps <= b.min[i] and b.max[i] <= a.max[i] + eps for i in range(3)
    )


def mesh_distance(a: Mesh, b: Mesh) -> float:
    """Exact minimum distance between two triangle surfaces (0 if they touch)."""
    return float(kernels.mesh_distance(a.corners(), b.corners()))


def penetrates(a: Mesh, b: Mesh, eps: float) -> bool:
    """Some vertex of one mesh lies inside the other, deeper than ``eps``."""
    for p, q in ((a, b), (b, a)):
        tris = q.corners()
        inside = kernels.points_inside(p.vertices, tris)
        if np.any(inside):
            depth = kernels.points_surface_distance(p.vertices[inside], tris)
            if np.any(depth > eps):
                return True
    return False


def classify_pair(a, b, cfg: RelationConfig = RelationConfig()) -> list:
    """Relations between two records (zero or two directed relations)."""
    if aabb_gap(a.box, b.box)[3] > cfg.eps_gap:
        return []
    if kernels.mesh_distance(a.corners, b.corners) > cfg.eps_contact:
        return []
    if penetrates(a.mesh, b.mesh, cfg.eps_contact):
        log.warning("objects %s and %s interpenetrate; no relation assigned", a.id, b.id)
        return []
    a_in_b = contains(b.box, a.box, cfg.eps_contain)
    b_in_a = contains(a.box, b.box, cfg.eps_contain)
    if b_in_a and not a_in_b:
        return [Relation(a.id, HOSTING, b.id), Relation(b.id, HOSTED, a.id)]
    if a_in_b and not b_in_a:
        return [Relation(b.id, HOSTING, a.id), Relation(a.id, HOSTED, b.id)]
    if a_in_b and b_in_a:
        log.warning(
            "objects %s and %s have identical bounding boxes; treated as adjacent",
            a.id, b.id,
        )
    return [Relation(a.id, ADJACENT, b.id), Relation(b.id, ADJACENT, a.id)]


def infer_all(objects, cfg: RelationConfig = RelationConfig(), n_jobs: int = 1) -> list:
    """Relations over every unordered pair, sorted (subject, predicate, object)."""
    seen = set()
    for obj in objects:
        if obj.id in seen:
            raise IdCollisionError(f"duplicate object id {obj.id!r}")
        seen.add(obj.id)
    pairs = list(itertools.combinations(objects, 2))
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            found = pool.map(lambda p: classify_pair(p[0], p[1], cfg), pairs)
            out = set(itertools.chain.from_iterable(found))
    else:
        out = set()
        for a, b in pairs:
            out.update(classify_pair(a, b, cfg))
    return sorted(out)


# --- scoring against ground truth ---------------------------------------------


def _pair_labels(relations) -> dict:
    labels = {}
    for r in relations:
        key = tuple(sorted((r.subject, r.object)))
        if r.predicate == ADJACENT:
            labels[key] = ADJACENT
        elif r.predicate == HOSTING:
            labels[key] = f"{r.subject}>{r.object}"
    return labels


@dataclass
class RelationScore:
    pair_accuracy: float
    precision: float
    recall: float
    f1: float
    exact: bool
    n_pairs: int


def score_relations(inferred, truth, object_ids) -> RelationScore:
    """Compare inferred relations with ground truth.

    Pair accuracy is over all unordered object pairs, each labelled none,
    adjacent, or hosting in a given direction. Precision, recall, and F1 are
    micro-averaged over directed relation triples.
    """
    inferred, truth = set(inferred), set(truth)
    pi, pt = _pair_labels(inferred), _pair_labels(truth)
    ids = sorted(set(object_ids))
    pairs = list(itertools.combinations(ids, 2))
    correct = sum(pi.get(p) == pt.get(p) for p in pairs)
    tp = len(inferred & truth)
    precision = tp / len(inferred) if inferred else 1.0
    recall = tp / len(truth) if truth else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return RelationScore(
        correct / len(pairs) if pairs else 1.0,
        precision, recall, f1, inferred == truth, len(pairs),
    )


def write_relations_csv(relations, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject", "predicate", "object"])
        for r in sorted(relations):
            writer.writerow([r.subject, r.predicate, r.object])


def read_relations_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["subject", "predicate", "object"]:
            raise ValueError(f"{path}: unexpected relation CSV header")
        return sorted(Relation(*row) for row in reader if row)
