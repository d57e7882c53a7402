"""End-to-end enrichment: geometry in, knowledge graph out, and back."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from . import classifier
from .attributes import compute_attributes
from .errors import BimEnrichError
from .features import extract_features
from .graph import BimGraph, build_graph
from .mesh import load_ply
from .reconstruct import compare_scenes, plan_from_graph, realize
from .records import ObjectRecord
from .relations import RelationConfig, infer_all
from .synth import SceneSpec, corpus_rows


class EmptyInputError(BimEnrichError):
    """No object geometries to work on."""


@dataclass
class EnrichmentResult:
    records: list
    relations: list
    graph: BimGraph


def _natural_key(path: Path):
    return [(0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.split(r"(\d+)", path.stem)]


def load_scene_dir(path) -> list:
    """``(id, Mesh)`` for every ``*.ply`` in ``path``, id = file stem.

    Files come back in natural order (``2.ply`` before ``10.ply``).
    """
    files = sorted(Path(path).glob("*.ply"), key=_natural_key)
    if not files:
        raise EmptyInputError(f"no PLY files in {path}")
    return [(f.stem, load_ply(f)) for f in files]


def classify_objects(objects, model) -> list:
    records = []
    for obj_id, mesh in objects:
        cls, conf = classifier.predict(model, extract_features(mesh))
        records.append(ObjectRecord(obj_id, mesh, object_class=cls, confidence=conf))
    return records


def enrich(objects, model, cfg: RelationConfig = RelationConfig(), n_jobs: int = 1):
    """Classify, relate, and attribute ``(id, Mesh)`` pairs, then build the graph."""
    objects = list(objects)
    if not objects:
        raise EmptyInputError("no objects to enrich")
    records = classify_objects(objects, model)
    relations = infer_all(records, cfg, n_jobs=n_jobs)
    for rec in records:
        rec.attributes = compute_attributes(rec)
    return EnrichmentResult(records, relations, build_graph(records, relations))


def roundtrip(scene, model, cfg: RelationConfig = RelationConfig(), tol: float = 1e-3):
    """Enrich ``(id, class, Mesh)`` objects, rebuild them from the graph, compare."""
    result = enrich(((i, m) for i, _, m in scene), model, cfg)
    rebuilt = realize(plan_from_graph(result.graph))
    return compare_scenes(scene, rebuilt, tol), result, rebuilt


def train_default_model(seed: int = 0, n_scenes: int = 32, spec: SceneSpec | None = None):
    """Random forest trained on a freshly generated corpus."""
    spec = spec or SceneSpec(seed=seed)
    data = classifier.LabeledDataset.from_rows(corpus_rows(spec, n_scenes))
    return classifier.train_forest(data, seed=seed)
