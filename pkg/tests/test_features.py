import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bimenrich.features import (
    FEATURE_NAMES,
    LOCATION_FEATURES,
    SHAPE_FEATURES,
    extract_features,
    features_from_csv,
    features_to_csv,
)
from bimenrich.mesh import Mesh, box_mesh


def test_nineteen_named_features():
    assert len(FEATURE_NAMES) == 19 == len(set(FEATURE_NAMES))
    assert set(LOCATION_FEATURES) | set(SHAPE_FEATURES) == set(FEATURE_NAMES)
    assert len(LOCATION_FEATURES) == 9


def test_unit_cube(unit_cube):
    f = extract_features(unit_cube)
    expected = {
        "extent_x": 1, "extent_y": 1, "extent_z": 1,
        "min_x": 0, "min_y": 0, "min_z": 0, "max_x": 1, "max_y": 1, "max_z": 1,
        "centroid_x": 0.5, "centroid_y": 0.5, "centroid_z": 0.5,
        "surface_area": 6, "volume": 1, "face_count": 12, "vertex_count": 8,
        "extent_ratio_max_min": 1, "vertical_ratio": 1, "aabb_fill": 1,
    }
    for name, value in expected.items():
        assert f[name] == pytest.approx(value), name
    assert not f.degenerate and f.volume_reliable


def test_wall_box_ratios():
    f = extract_features(box_mesh((0, 0, 0), (4.0, 0.2, 3.0)))
    assert f["extent_ratio_max_min"] == pytest.approx(20.0)
    assert f["vertical_ratio"] == pytest.approx(0.75)
    assert f["aabb_fill"] == pytest.approx(1.0)


def test_flat_mesh_is_flagged():
    f = extract_features(Mesh([(0, 0, 0), (2, 0, 0), (0, 3, 0)], [(0, 1, 2)]))
    assert f.degenerate
    assert not f.volume_reliable
    assert np.all(np.isfinite(f.as_array()))
    assert f["extent_ratio_max_min"] == pytest.approx(3.0 / 1e-9)


def test_csv_roundtrip(tmp_path):
    rows = [
        ("a", "wall", extract_features(box_mesh((0, 0, 0), (4, 0.2, 3)))),
        ("b", "door", extract_features(box_mesh((1.1, 0, 0), (1.9, 2.0 / 3.0, 2.1)))),
    ]
    p = tmp_path / "f.csv"
    features_to_csv(rows, p)
    lines = p.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0] == "id,label," + ",".join(FEATURE_NAMES)
    back = features_from_csv(p)
    for (i, label, fv), (j, label2, fv2) in zip(rows, back):
        assert (i, label) == (j, label2)
        np.testing.assert_allclose(fv2.as_array(), fv.as_array(), rtol=0, atol=1e-9)


def test_csv_unlabeled_and_empty(tmp_path):
    p = tmp_path / "u.csv"
    features_to_csv([("x", None, extract_features(box_mesh((0, 0, 0), (1, 2, 3))))], p)
    assert features_from_csv(p)[0][1] is None
    e = tmp_path / "e.csv"
    features_to_csv([], e)
    assert len(e.read_text().splitlines()) == 1
    assert features_from_csv(e) == []


offsets = st.floats(min_value=-100, max_value=100, allow_nan=False)
sizes = st.floats(min_value=0.05, max_value=10, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.tuples(sizes, sizes, sizes), st.tuples(offsets, offsets, offsets))
def test_translation_equivariance(size, offset):
    base = box_mesh((0, 0, 0), size)
    f0, f1 = extract_features(base), extract_features(base.translated(offset))
    for name in SHAPE_FEATURES:
        assert f1[name] == pytest.approx(f0[name], rel=1e-9, abs=1e-9), name
    for name in LOCATION_FEATURES:
        axis = "xyz".index(name[-1])
        assert f1[name] == pytest.approx(f0[name] + offset[axis], rel=1e-9, abs=1e-9), name


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_counts_match_mesh(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(int(rng.integers(3, 30)), 3))
    t = rng.integers(0, len(v), size=(int(rng.integers(1, 40)), 3))
    f = extract_features(Mesh(v, t))
    assert f["face_count"] == len(t) and f["vertex_count"] == len(v)
    assert np.all(np.isfinite(f.as_array()))
