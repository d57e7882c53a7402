from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

from .mesh import Aabb, Mesh, aabb

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")


def check_object_id(obj_id: str) -> str:
    """Ids end up in Turtle local names, so they are restricted to [A-Za-z0-9_-]."""
    obj_id = str(obj_id)
    if not _ID_RE.match(obj_id):
        raise ValueError(f"invalid object id {obj_id!r}")
    return obj_id


@dataclass(eq=False)
class ObjectRecord:
    """One building object moving through the enrichment stages."""

    id: str
    mesh: Mesh
    object_class: str | None = None
    confidence: float | None = None
    attributes: object = None  # AttributeMap once computed
    flags: tuple = field(default=())

    def __post_init__(self):
        self.id = check_object_id(self.id)

    @cached_property
    def box(self) -> Aabb:
        return aabb(self.mesh)

    @cached_property
    def corners(self):
        return self.mesh.corners()
