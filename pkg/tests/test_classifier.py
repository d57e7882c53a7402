import json

import numpy as np
import pytest

from bimenrich import classifier as clf
from bimenrich.errors import DatasetError, FeatureArityError
from bimenrich.features import N_FEATURES, extract_features
from bimenrich.mesh import box_mesh
from bimenrich.synth import SceneSpec, corpus_rows


def toy(n=20, seed=0):
    """Two classes separable on feature 0 at 0.5."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, size=(n, N_FEATURES))
    X[: n // 2, 0] = rng.uniform(0.0, 0.4, n // 2)
    X[n // 2 :, 0] = rng.uniform(0.6, 1.0, n - n // 2)
    labels = ["door"] * (n // 2) + ["wall"] * (n - n // 2)
    return clf.LabeledDataset(X, labels)


def constant_tree(label):
    counts = [0.0] * len(clf.CLASSES)
    counts[clf.CLASSES.index(label)] = 3.0
    return clf.TreeModel(clf.FEATURE_NAMES, [-1], [0.0], [-1], [-1], [counts], {})


@pytest.fixture(scope="module")
def corpus():
    return clf.LabeledDataset.from_rows(corpus_rows(SceneSpec(seed=21), 30))


def test_split_sizes_paper_scale():
    data = clf.LabeledDataset(np.zeros((1484, N_FEATURES)), ["wall"] * 1484)
    tr, va, te = clf.split(data, clf.SplitSpec(seed=4))
    assert (len(tr), len(va), len(te)) == (1038, 148, 298)
    ids = tr.ids + va.ids + te.ids
    assert sorted(ids) == sorted(data.ids)


def test_split_small_and_deterministic():
    data = toy(10)
    a = clf.split(data, clf.SplitSpec(seed=9))
    b = clf.split(data, clf.SplitSpec(seed=9))
    assert [len(s) for s in a] == [7, 1, 2]
    assert [s.ids for s in a] == [s.ids for s in b]
    with pytest.raises(DatasetError):
        clf.split(toy(10).subset(range(9)))


def test_split_fractions_validated():
    with pytest.raises(ValueError):
        clf.SplitSpec(0.5, 0.1, 0.1)


def test_dataset_validation():
    with pytest.raises(DatasetError):
        clf.LabeledDataset(np.zeros((1, N_FEATURES)), ["roof"])
    with pytest.raises(FeatureArityError):
        clf.LabeledDataset(np.zeros((1, 5)), ["wall"])
    with pytest.raises(DatasetError):
        clf.LabeledDataset(np.full((1, N_FEATURES), np.nan), ["wall"])


def test_toy_tree_is_a_stump():
    data = toy()
    tree = clf.train_tree(data)
    assert tree.depth() == 1
    assert tree.feature[0] == 0
    assert 0.4 <= tree.threshold[0] <= 0.6
    assert clf.evaluate(tree, data).accuracy == 1.0
    x = np.full(N_FEATURES, 0.5)
    x[0] = 0.9
    assert clf.predict(tree, x) == ("wall", 1.0)


def test_single_class_gives_constant_model():
    data = clf.LabeledDataset(np.random.default_rng(0).normal(size=(8, N_FEATURES)), ["floor"] * 8)
    tree = clf.train_tree(data)
    assert tree.depth() == 0
    for x in np.random.default_rng(1).normal(size=(5, N_FEATURES)):
        assert clf.predict(tree, x) == ("floor", 1.0)


def test_depth_limit_respected(corpus):
    tree = clf.train_tree(corpus, max_depth=2)
    assert tree.depth() <= 2
    for f, l, r in zip(tree.feature, tree.left, tree.right):
        assert (f < 0) == (l < 0) == (r < 0)


def test_forest_vote_confidence():
    forest = clf.ForestModel(
        [constant_tree("wall"), constant_tree("door"), constant_tree("wall")], [0, 1, 2], {}
    )
    cls, conf = clf.predict(forest, np.zeros(N_FEATURES))
    assert cls == "wall" and conf == pytest.approx(2 / 3)


def test_vote_tie_breaks_by_class_name():
    forest = clf.ForestModel([constant_tree("window"), constant_tree("door")], [0, 1], {})
    assert clf.predict(forest, np.zeros(N_FEATURES)) == ("door", 0.5)


def test_one_tree_forest_equals_tree(corpus):
    tree = clf.train_tree(corpus)
    forest = clf.train_forest(corpus, n_trees=1, max_features=N_FEATURES, bootstrap=False)
    rng = np.random.default_rng(0)
    lo, hi = corpus.X.min(axis=0), corpus.X.max(axis=0)
    probes = rng.uniform(lo - 0.1 * (hi - lo), hi + 0.1 * (hi - lo), size=(1000, N_FEATURES))
    for x in probes:
        assert clf.predict(forest, x)[0] == clf.predict(tree, x)[0]


def test_forest_seeded_determinism(corpus):
    a = clf.model_to_json(clf.train_forest(corpus, n_trees=5, seed=3))
    b = clf.model_to_json(clf.train_forest(corpus, n_trees=5, seed=3, n_jobs=3))
    c = clf.model_to_json(clf.train_forest(corpus, n_trees=5, seed=4))
    assert a == b != c


def test_knn_predicts_training_points():
    data = toy()
    knn = clf.train_knn(data, k=3)
    for x, label in zip(data.X, data.labels):
        assert clf.predict(knn, x) == (label, 1.0)


def test_arity_mismatch():
    tree = clf.train_tree(toy())
    with pytest.raises(FeatureArityError):
        clf.predict(tree, np.zeros(N_FEATURES - 1))


def test_evaluate_majority_and_confusion():
    X = np.zeros((10, N_FEATURES))
    data = clf.LabeledDataset(X, ["wall"] * 5 + ["door"] * 5)
    model = constant_tree("wall")
    report = clf.evaluate(model, data)
    assert report.accuracy == 0.5
    assert report.confusion.sum() == len(data)
    perfect = clf.score_labels(["wall", "door"], ["wall", "door"])
    assert perfect.accuracy == 1.0 and perfect.macro_f1 == 1.0


def test_shape_only_model_is_translation_invariant(corpus):
    tree = clf.train_tree(corpus, feature_names="shape")
    meshes = [box_mesh((0, 0, 0), (4, 0.2, 3)), box_mesh((0, 0, 0), (1.2, 0.1, 1.4)),
              box_mesh((0, 0, -0.2), (6, 5, 0))]
    for m in meshes:
        ref = clf.predict(tree, extract_features(m))[0]
        for offset in [(10, 10, 0), (-55.5, 3.25, 7.0)]:
            assert clf.predict(tree, extract_features(m.translated(offset)))[0] == ref


@pytest.mark.parametrize("kind", ["tree", "forest", "knn"])
def test_model_file_roundtrip(tmp_path, corpus, kind):
    model = {
        "tree": lambda: clf.train_tree(corpus),
        "forest": lambda: clf.train_forest(corpus, n_trees=4),
        "knn": lambda: clf.train_knn(corpus),
    }[kind]()
    p = tmp_path / "m.json"
    clf.save_model(model, p)
    doc = json.loads(p.read_text())
    assert doc["format"] == "bimenrich-model" and doc["version"] == 1
    back = clf.load_model(p)
    assert clf.model_to_json(back) == clf.model_to_json(model)
    for x in corpus.X[:50]:
        assert clf.predict(back, x) == clf.predict(model, x)


def test_corpus_accuracy(corpus):
    tr, va, te = clf.split(corpus, clf.SplitSpec(seed=1))
    for model in (clf.train_tree(tr), clf.train_forest(tr, n_trees=20)):
        assert clf.evaluate(model, te).accuracy >= 0.99


def test_accuracy_table_columns():
    r = clf.score_labels(["wall"], ["wall"])
    text = clf.format_accuracy_table([("Random forest", r, r)])
    header, row = text.splitlines()
    for col in ("No.", "Machine learning algorithm", "Valid accuracy", "Test accuracy"):
        assert col in header
    assert "100.00%" in row
