"""Semantic enrichment of bare building-object meshes.

Object meshes go in. Each object is classified as wall, floor, window,
or door. The package then infers adjacency and hosting relations,
computes dimensional attributes, and writes a Turtle knowledge graph.
The graph can be turned back into a model and compared with the input.
"""

from .attributes import AttributeMap, compute_attributes
from .classifier import load_model, predict, train_forest, train_knn, train_tree
from .features import FeatureVector, extract_features
from .graph import BimGraph, build_graph, parse_turtle, serialize_turtle
from .kernels import BACKEND
from .mesh import Aabb, Mesh, aabb, load_ply, surface_area, volume, write_ply
from .pipeline import enrich, roundtrip
from .reconstruct import compare_scenes, plan_from_graph, realize
from .records import ObjectRecord
from .relations import Relation, RelationConfig, infer_all
from .synth import SceneSpec, generate_scene

__version__ = "0.1.0"

__all__ = [
    "Aabb",
    "AttributeMap",
    "BACKEND",
    "BimGraph",
    "FeatureVector",
    "Mesh",
    "ObjectRecord",
    "Relation",
    "RelationConfig",
    "SceneSpec",
    "aabb",
    "build_graph",
    "compare_scenes",
    "compute_attributes",
    "enrich",
    "extract_features",
    "generate_scene",
    "infer_all",
    "load_model",
    "load_ply",
    "parse_turtle",
    "plan_from_graph",
    "predict",
    "realize",
    "roundtrip",
    "serialize_turtle",
    "surface_area",
    "train_forest",
    "train_knn",
    "train_tree",
    "volume",
    "write_ply",
]
