"""Geometry kernel dispatch.

Uses the compiled ``_ckernels`` extension when it is importable and falls
back to the numpy implementation otherwise. Set ``BIMENRICH_PURE_PYTHON=1``
to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("BIMENRICH_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811
    except ImportError:
        pass
    else:
        BACKEND = "cython"

tri_tri_distance = _impl.tri_tri_distance
mesh_distance = _impl.mesh_distance
mesh_distance_bruteforce = _impl.mesh_distance_bruteforce
points_inside = _impl.points_inside
points_surface_distance = _impl.points_surface_distance

__all__ = [
    "BACKEND",
    "mesh_distance",
    "mesh_distance_bruteforce",
    "points_inside",
    "points_surface_distance",
    "tri_tri_distance",
]
