"""Object-type classifiers: CART decision tree, random forest, and KNN.

Trees use Gini impurity with midpoint thresholds between consecutive
distinct feature values. Every tie is broken deterministically: equal
split gains by lowest feature index then lowest threshold, equal votes by
class name order. Models persist as sorted-key JSON so identical training
runs produce identical bytes.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetError, FeatureArityError
from .features import FEATURE_NAMES, N_FEATURES, SHAPE_FEATURES, FeatureVector

CLASSES = ("door", "floor", "wall", "window")
MODEL_FORMAT = "bimenrich-model"
MODEL_VERSION = 1

_GAIN_TOL = 1e-12


# --- datasets -----------------------------------------------------------------


@dataclass
class LabeledDataset:
    X: np.ndarray
    labels: list
    ids: list = field(default=None)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.labels), -1)
        self.labels = [str(l) for l in self.labels]
        if self.ids is None:
            self.ids = [str(i) for i in range(len(self.labels))]
        if self.X.shape[1] != N_FEATURES:
            raise FeatureArityError(
                f"dataset has {self.X.shape[1]} features, expected {N_FEATURES}"
            )
        unknown = sorted(set(self.labels) - set(CLASSES))
        if unknown:
            raise DatasetError(f"unknown class labels: {unknown}")
        if not np.all(np.isfinite(self.X)):
            raise DatasetError("dataset contains non-finite feature values")

    def __len__(self):
        return len(self.labels)

    def subset(self, index) -> "LabeledDataset":
        index = list(index)
        return LabeledDataset(
            self.X[index], [self.labels[i] for i in index], [self.ids[i] for i in index]
        )

    @classmethod
    def from_rows(cls, rows) -> "LabeledDataset":
        """Build from ``(id, label, FeatureVector)`` rows (CSV reader output)."""
        rows = [r for r in rows if r[1] is not None]
        X = np.array([r[2].values for r in rows]).reshape(len(rows), N_FEATURES)
        return cls(X, [r[1] for r in rows], [r[0] for r in rows])


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.7
    valid: float = 0.1
    test: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if abs(self.train + self.valid + self.test - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")
        if min(self.train, self.valid, self.test) < 0:
            raise ValueError("split fractions must be non-negative")


def split(dataset: LabeledDataset, spec: SplitSpec = SplitSpec()):
    """Seeded shuffle, then contiguous train/valid/test slices.

    Train and validation sizes are floored; the remainder goes to test.
    """
    n = len(dataset)
    if n < 10:
        raise DatasetError(f"dataset of {n} rows is too small to split (need >= 10)")
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_train = math.floor(n * spec.train + 1e-9)
    n_valid = math.floor(n * spec.valid + 1e-9)
    return (
        dataset.subset(perm[:n_train]),
        dataset.subset(perm[n_train : n_train + n_valid]),
        dataset.subset(perm[n_train + n_valid :]),
    )


# --- models -------------------------------------------------------------------


def _argmax_first(values) -> int:
    # np.argmax returns the first maximum, which is the lexicographically
    # smallest class because CLASSES is sorted.
    return int(np.argmax(values))


@dataclass
class TreeModel:
    feature_names: tuple
    feature: list
    threshold: list
    left: list
    right: list
    value: list
    params: dict
    classes: tuple = CLASSES

    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def leaf_distribution(self, x) -> np.ndarray:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        return np.asarray(self.value[i], dtype=float)

    def _vote(self, x):
        dist = self.leaf_distribution(x)
        k = _argmax_first(dist)
        return k, float(dist[k] / dist.sum())

    def to_dict(self) -> dict:
        return {
            "kind": "tree",
            "feature_names": list(self.feature_names),
            "params": dict(self.params),
            "nodes": {
                "feature": list(self.feature),
                "threshold": list(self.threshold),
                "left": list(self.left),
                "right": list(self.right),
                "value": [list(v) for v in self.value],
            },
        }

    @classmethod
    def from_dict(cls, d) -> "TreeModel":
        n = d["nodes"]
        return cls(
            tuple(d["feature_names"]),
            list(n["feature"]),
            list(n["threshold"]),
            list(n["left"]),
            list(n["right"]),
            [list(v) for v in n["value"]],
            dict(d["params"]),
        )


@dataclass
class ForestModel:
    trees: list
    tree_seeds: list
    params: dict
    classes: tuple = CLASSES

    @property
    def feature_names(self):
        return self.trees[0].feature_names

    def _vote(self, x):
        votes = np.zeros(len(self.classes))
        for tree in self.trees:
            votes[tree._vote(x)[0]] += 1
        k = _argmax_first(votes)
        return k, float(votes[k] / len(self.trees))

    def to_dict(self) -> dict:
        return {
            "kind": "forest",
            "params": dict(self.params),
            "tree_seeds": [int(s) for s in self.tree_seeds],
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "ForestModel":
        return cls(
            [TreeModel.from_dict(t) for t in d["trees"]],
            list(d["tree_seeds"]),
            dict(d["params"]),
        )


@dataclass
class KnnModel:
    feature_names: tuple
    X: np.ndarray  # standardized training vectors
    labels: list
    mean: np.ndarray
    scale: np.ndarray
    k: int
    params: dict
    classes: tuple = CLASSES

    def _vote(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.scale
        d = np.sqrt(((self.X - z) ** 2).sum(axis=1))
        nearest = np.argsort(d, kind="stable")[: self.k]
        votes = np.zeros(len(self.classes))
        exact = nearest[d[nearest] == 0.0]
        if len(exact):
            for i in exact:
                votes[self.classes.index(self.labels[i])] += 1.0
        else:
            for i in nearest:
                votes[self.classes.index(self.labels[i])] += 1.0 / d[i]
        k = _argmax_first(votes)
        return k, float(votes[k] / votes.sum())

    def to_dict(self) -> dict:
        return {
            "kind": "knn",
            "feature_names": list(self.feature_names),
            "params": dict(self.params),
            "k": int(self.k),
            "standardization": {
                "mean": [float(v) for v in self.mean],
                "scale": [float(v) for v in self.scale],
            },
            "train_X": [[float(v) for v in row] for row in self.X],
            "train_labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, d) -> "KnnModel":
        return cls(
            tuple(d["feature_names"]),
            np.array(d["train_X"], dtype=float).reshape(len(d["train_labels"]), -1),
            list(d["train_labels"]),
            np.array(d["standardization"]["mean"]),
            np.array(d["standardization"]["scale"]),
            int(d["k"]),
            dict(d["params"]),
        )


# --- training -----------------------------------------------------------------


def _resolve_features(feature_names):
    if feature_names is None:
        feature_names = FEATURE_NAMES
    elif feature_names == "shape":
        feature_names = SHAPE_FEATURES
    feature_names = tuple(feature_names)
    missing = [f for f in feature_names if f not in FEATURE_NAMES]
    if missing:
        raise ValueError(f"unknown features: {missing}")
    cols = [FEATURE_NAMES.index(f) for f in feature_names]
    return feature_names, cols


def _class_index(labels):
    return np.array([CLASSES.index(l) for l in labels], dtype=np.int64)


def _gini(counts, n):
    return 1.0 - ((counts / n) ** 2).sum(axis=-1)


def _best_split(X, y, idx, features, min_leaf):
    """Best (gain, feature, threshold) over ``features`` for samples ``idx``."""
    n = len(idx)
    n_classes = len(CLASSES)
    parent_counts = np.bincount(y[idx], minlength=n_classes).astype(float)
    parent = _gini(parent_counts, n)
    best = (0.0, -1, 0.0)
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y[idx][order]] = 1.0
        left = np.cumsum(onehot, axis=0)[:-1]
        nl = np.arange(1, n, dtype=float)
        nr = n - nl
        valid = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not np.any(valid):
            continue
        right = parent_counts - left
        weighted = (nl * _gini(left, nl[:, None]) + nr * _gini(right, nr[:, None])) / n
        gain = np.where(valid, parent - weighted, -np.inf)
        top = gain.max()
        if top <= best[0] + _GAIN_TOL:
            continue
        k = int(np.nonzero(gain >= top - _GAIN_TOL)[0][0])
        thr = (xs[k] + xs[k + 1]) / 2.0
        if not thr < xs[k + 1]:
            thr = xs[k]
        best = (float(top), int(f), float(thr))
    return best


def _grow(X, y, max_depth, min_leaf, max_features, rng):
    """Grow one CART tree over columns of ``X``; returns flat node lists."""
    n_feat = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.bincount(y[idx], minlength=len(CLASSES)).astype(float).tolist())
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = value[node]
        if depth >= max_depth or max(counts) == len(idx) or len(idx) < 2 * min_leaf:
            continue
        if max_features is None or max_features >= n_feat:
            cand = range(n_feat)
        else:
            cand = np.sort(rng.choice(n_feat, size=max_features, replace=False))
        gain, f, thr = _best_split(X, y, idx, cand, min_leaf)
        if f < 0:
            continue
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return feature, threshold, left, right, value


def train_tree(train: LabeledDataset, max_depth: int = 12, min_leaf: int = 1,
               feature_names=None) -> TreeModel:
    """Fit a CART tree. ``feature_names="shape"`` drops location features."""
    if len(train) == 0:
        raise DatasetError("empty training set")
    names, cols = _resolve_features(feature_names)
    nodes = _grow(train.X[:, cols], _class_index(train.labels), max_depth, min_leaf, None, None)
    params = {"max_depth": max_depth, "min_leaf": min_leaf}
    return TreeModel(names, *nodes, params=params)


def train_forest(train: LabeledDataset, n_trees: int = 50, max_depth: int = 12,
                 min_leaf: int = 1, max_features: int | None = None,
                 bootstrap: bool = True, seed: int = 0, feature_names=None,
                 n_jobs: int = 1) -> ForestModel:
    """Fit a random forest of bootstrap-sampled CART trees.

    ``max_features`` defaults to ceil(sqrt(number of features)). Each tree
    draws its bootstrap sample and per-split feature subsets from its own
    seed, so the forest is reproducible regardless of ``n_jobs``.
    """
    if len(train) == 0:
        raise DatasetError("empty training set")
    if n_trees < 1:
        raise ValueError("forest needs at least one tree")
    names, cols = _resolve_features(feature_names)
    if max_features is None:
        max_features = math.ceil(math.sqrt(len(cols)))
    X = train.X[:, cols]
    y = _class_index(train.labels)
    seeds = [int(s) for s in np.random.SeedSequence(seed).generate_state(n_trees)]
    tree_params = {"max_depth": max_depth, "min_leaf": min_leaf}

    def fit(tree_seed):
        rng = np.random.default_rng(tree_seed)
        if bootstrap:
            rows = rng.integers(0, len(y), size=len(y))
        else:
            rows = np.arange(len(y))
        nodes = _grow(X[rows], y[rows], max_depth, min_leaf, max_features, rng)
        return TreeModel(names, *nodes, params=dict(tree_params))

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(fit, seeds))
    else:
        trees = [fit(s) for s in seeds]
    params = {
        "n_trees": n_trees,
        "max_depth": max_depth,
        "min_leaf": min_leaf,
        "max_features": max_features,
        "bootstrap": bootstrap,
        "seed": seed,
    }
    return ForestModel(trees, seeds, params)


def train_knn(train: LabeledDataset, k: int = 5, feature_names=None) -> KnnModel:
    """Store z-score standardized training vectors for k-nearest-neighbor voting."""
    if len(train) == 0:
        raise DatasetError("empty training set")
    names, cols = _resolve_features(feature_names)
    X = train.X[:, cols]
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return KnnModel(names, (X - mean) / scale, list(train.labels), mean, scale, k,
                    {"k": k, "metric": "euclidean", "standardize": "zscore"})


# --- prediction and evaluation ------------------------------------------------


def _model_columns(model):
    return [FEATURE_NAMES.index(f) for f in model.feature_names]


def _as_full_vector(fv) -> np.ndarray:
    x = fv.as_array() if isinstance(fv, FeatureVector) else np.asarray(fv, dtype=float).ravel()
    if len(x) != N_FEATURES:
        raise FeatureArityError(f"expected {N_FEATURES} features, got {len(x)}")
    return x


def predict(model, fv) -> tuple:
    """Return ``(class_name, confidence)`` for one feature vector."""
    x = _as_full_vector(fv)[_model_columns(model)]
    k, conf = model._vote(x)
    return model.classes[k], conf


def predict_many(model, X) -> list:
    X = np.asarray(X, dtype=float).reshape(-1, N_FEATURES)
    return [predict(model, row) for row in X]


@dataclass
class EvaluationReport:
    accuracy: float
    macro_f1: float
    precision: dict
    recall: dict
    f1: dict
    confusion: np.ndarray  # rows: truth, columns: prediction, CLASSES order
    n: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": self.confusion.tolist(),
            "classes": list(CLASSES),
            "n": self.n,
        }


def score_labels(truth, predicted) -> EvaluationReport:
    if not truth:
        raise DatasetError("cannot evaluate on an empty set")
    conf = np.zeros((len(CLASSES), len(CLASSES)), dtype=int)
    for t, p in zip(truth, predicted):
        conf[CLASSES.index(t), CLASSES.index(p)] += 1
    precision, recall, f1 = {}, {}, {}
    for i, name in enumerate(CLASSES):
        tp = conf[i, i]
        support = conf[i].sum()
        called = conf[:, i].sum()
        if support == 0 and called == 0:
            continue
        precision[name] = tp / called if called else 0.0
        recall[name] = tp / support if support else 0.0
        s = precision[name] + recall[name]
        f1[name] = 2 * precision[name] * recall[name] / s if s else 0.0
    accuracy = float(np.trace(conf) / conf.sum())
    macro = float(np.mean(list(f1.values())))
    return EvaluationReport(accuracy, macro, precision, recall, f1, conf, int(conf.sum()))


def evaluate(model, dataset: LabeledDataset) -> EvaluationReport:
    if len(dataset) == 0:
        raise DatasetError("cannot evaluate on an empty set")
    predicted = [c for c, _ in predict_many(model, dataset.X)]
    return score_labels(dataset.labels, predicted)


def format_accuracy_table(rows) -> str:
    """Aligned text table of ``(algorithm, valid_report, test_report)`` rows."""
    header = ("No.", "Machine learning algorithm", "Valid accuracy", "Test accuracy")
    body = [
        (str(i), name, f"{v.accuracy * 100:.2f}%", f"{t.accuracy * 100:.2f}%")
        for i, (name, v, t) in enumerate(rows, start=1)
    ]
    widths = [max(len(r[c]) for r in [header, *body]) for c in range(4)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
             for r in [header, *body]]
    return "\n".join(lines)


# --- persistence --------------------------------------------------------------


def model_to_json(model) -> str:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "classes": list(model.classes),
        "model": model.to_dict(),
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def model_from_json(text: str):
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a bimenrich model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    body = doc["model"]
    kinds = {"tree": TreeModel, "forest": ForestModel, "knn": KnnModel}
    if body.get("kind") not in kinds:
        raise ValueError(f"unknown model kind {body.get('kind')!r}")
    return kinds[body["kind"]].from_dict(body)


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_json(model))


def load_model(path):
    with open(path) as fh:
        return model_from_json(fh.read())
