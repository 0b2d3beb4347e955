"""CART regression trees, bagged forests, metrics, and model documents.

Split rule: minimize the summed child SSE over all features and all midpoints
of consecutive distinct sorted feature values; ties go to the lowest feature
index, then the lowest threshold. Routing uses x[feature] <= threshold ->
left. Leaves predict the node target mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._treefit import LEAF, fit_kernel, predict_kernel

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TreeHyperparams:
    max_depth: int
    min_samples_split: int = 2
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise ValueError(f"min_samples_split must be >= 2, got {self.min_samples_split}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")


@dataclass(frozen=True)
class ForestHyperparams:
    n_estimators: int
    tree: TreeHyperparams

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError(f"n_estimators must be >= 1, got {self.n_estimators}")


class RegressionTree:
    """Fitted CART tree stored as flat node arrays (index 0 = root).

    feature[i] == -1 marks a leaf. Immutable once fitted; safe for concurrent
    prediction.
    """

    def __init__(self, feature, threshold, left, right, value, n_node_samples, depths,
                 hyperparams: TreeHyperparams, seed: int = 0):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.n_node_samples = n_node_samples
        self.depths = depths
        self.hyperparams = hyperparams
        self.seed = seed
        self.metadata: dict = {}

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        return int(self.depths.max())

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        return predict_kernel(self.feature, self.threshold, self.left, self.right,
                              self.value, X)

    def predict_one(self, x) -> float:
        return float(self.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


class RandomForest:
    """Bagged ensemble; prediction is the exact mean over trees in index order."""

    def __init__(self, trees: list[RegressionTree], hyperparams: ForestHyperparams,
                 bootstrap_seeds: np.ndarray, seed: int = 0, bootstrap: bool = True):
        if len(trees) != hyperparams.n_estimators:
            raise ValueError("tree count does not match n_estimators")
        self.trees = trees
        self.hyperparams = hyperparams
        self.bootstrap_seeds = bootstrap_seeds
        self.seed = seed
        self.bootstrap = bootstrap
        self.metadata: dict = {}

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, dtype=np.float64)))
        acc = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)

    def predict_one(self, x) -> float:
        return float(self.predict(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def _check_training_data(X, y):
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.ascontiguousarray(np.asarray(y, dtype=np.float64))
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"bad training shapes: X {X.shape}, y {y.shape}")
    if X.shape[0] < 1:
        raise ValueError("empty training data")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite values in training data")
    return X, y


def fit_tree(X, y, hp: TreeHyperparams, seed: int = 0,
             max_features: int | None = None) -> RegressionTree:
    """Greedy CART fit. `seed` only matters when `max_features` restricts the
    per-split feature pool (off by default: all features considered)."""
    X, y = _check_training_data(X, y)
    mf = X.shape[1] if max_features is None else int(max_features)
    arrays = fit_kernel(X, y, hp.max_depth, hp.min_samples_split,
                        hp.min_samples_leaf, mf, np.uint64(seed))
    return RegressionTree(*arrays, hyperparams=hp, seed=seed)


def predict_tree(tree: RegressionTree, x) -> float:
    """Route one feature vector to its leaf value."""
    return tree.predict_one(x)


def fit_forest(X, y, hp: ForestHyperparams, seed: int = 0, bootstrap: bool = True,
               max_features: int | None = None) -> RandomForest:
    """Fit n_estimators trees on bootstrap resamples (size n, with replacement),
    seeded per tree from `seed`; with bootstrap=False every tree sees the full
    training set."""
    X, y = _check_training_data(X, y)
    m = X.shape[0]
    children = np.random.SeedSequence(seed).spawn(hp.n_estimators)
    boot_seeds = np.array(
        [c.generate_state(1, np.uint64)[0] for c in children], dtype=np.uint64
    )
    trees = []
    for i, child in enumerate(children):
        if bootstrap:
            rng = np.random.default_rng(child)
            rows = rng.integers(0, m, size=m)
            Xi, yi = X[rows], y[rows]
        else:
            Xi, yi = X, y
        trees.append(fit_tree(Xi, yi, hp.tree, seed=int(boot_seeds[i]),
                              max_features=max_features))
    forest = RandomForest(trees, hp, boot_seeds, seed=seed, bootstrap=bootstrap)
    return forest


def predict_forest(forest: RandomForest, x) -> float:
    """Arithmetic mean of member-tree predictions in fixed tree order."""
    return forest.predict_one(x)


@dataclass(frozen=True)
class Metrics:
    rmse: float
    mae: float
    r2: float


def compute_metrics(y_true, y_pred) -> Metrics:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ValueError("y_true and y_pred must be equal-length and non-empty")
    err = y_pred - y_true
    ss_res = float(np.sum(err * err))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("degenerate target: y_true has zero variance, R^2 undefined")
    rmse = float(np.sqrt(np.mean(err * err)))
    mae = float(np.mean(np.abs(err)))
    return Metrics(rmse=rmse, mae=mae, r2=1.0 - ss_res / ss_tot)


# --- model documents -------------------------------------------------------

def _tree_nodes(tree: RegressionTree) -> list:
    return [
        [int(f), float(t), int(l), int(r), float(v), int(n)]
        for f, t, l, r, v, n in zip(tree.feature, tree.threshold, tree.left,
                                    tree.right, tree.value, tree.n_node_samples)
    ]


def _nodes_to_arrays(nodes: list, where: str):
    try:
        arr = [(int(n[0]), float(n[1]), int(n[2]), int(n[3]), float(n[4]), int(n[5]))
               for n in nodes]
    except (TypeError, ValueError, IndexError) as exc:
        raise ValueError(f"malformed node list at {where}: {exc}") from exc
    feature = np.array([a[0] for a in arr], dtype=np.int64)
    threshold = np.array([a[1] for a in arr], dtype=np.float64)
    left = np.array([a[2] for a in arr], dtype=np.int64)
    right = np.array([a[3] for a in arr], dtype=np.int64)
    value = np.array([a[4] for a in arr], dtype=np.float64)
    n_samples = np.array([a[5] for a in arr], dtype=np.int64)
    depths = _recompute_depths(feature, left, right, where)
    return feature, threshold, left, right, value, n_samples, depths


def _recompute_depths(feature, left, right, where: str) -> np.ndarray:
    n = len(feature)
    depths = np.zeros(n, dtype=np.int64)
    stack = [(0, 0)]
    seen = 0
    while stack:
        node, d = stack.pop()
        if not 0 <= node < n:
            raise ValueError(f"malformed document at {where}: node index {node} out of range")
        depths[node] = d
        seen += 1
        if feature[node] != LEAF:
            stack.append((int(left[node]), d + 1))
            stack.append((int(right[node]), d + 1))
    if seen != n:
        raise ValueError(f"malformed document at {where}: {n - seen} unreachable nodes")
    return depths


def serialize_model(model, metadata: dict | None = None) -> str:
    """Portable text document for a fitted tree or forest (format_version 1)."""
    meta = dict(model.metadata)
    if metadata:
        meta.update(metadata)
    doc: dict = {"format_version": MODEL_FORMAT_VERSION, "metadata": meta}
    if isinstance(model, RegressionTree):
        doc["kind"] = "tree"
        doc["seed"] = int(model.seed)
        hp = model.hyperparams
        doc["hyperparams"] = {
            "max_depth": hp.max_depth,
            "min_samples_split": hp.min_samples_split,
            "min_samples_leaf": hp.min_samples_leaf,
        }
        doc["nodes"] = _tree_nodes(model)
    elif isinstance(model, RandomForest):
        doc["kind"] = "forest"
        doc["seed"] = int(model.seed)
        doc["bootstrap"] = bool(model.bootstrap)
        hp = model.hyperparams
        doc["hyperparams"] = {
            "n_estimators": hp.n_estimators,
            "max_depth": hp.tree.max_depth,
            "min_samples_split": hp.tree.min_samples_split,
            "min_samples_leaf": hp.tree.min_samples_leaf,
        }
        doc["bootstrap_seeds"] = [int(s) for s in model.bootstrap_seeds]
        doc["trees"] = [_tree_nodes(t) for t in model.trees]
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc, sort_keys=True)


def deserialize_model(document: str):
    """Parse a model document; raises ValueError with a location on malformed
    input and never returns a partially built model."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed model document at char {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ValueError("malformed model document: top level is not an object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {version!r}")
    try:
        kind = doc["kind"]
        hp = doc["hyperparams"]
        if kind == "tree":
            thp = TreeHyperparams(hp["max_depth"], hp["min_samples_split"],
                                  hp["min_samples_leaf"])
            model = RegressionTree(*_nodes_to_arrays(doc["nodes"], "nodes"),
                                   hyperparams=thp, seed=int(doc.get("seed", 0)))
        elif kind == "forest":
            thp = TreeHyperparams(hp["max_depth"], hp["min_samples_split"],
                                  hp["min_samples_leaf"])
            fhp = ForestHyperparams(hp["n_estimators"], thp)
            trees = [
                RegressionTree(*_nodes_to_arrays(nodes, f"trees[{i}]"),
                               hyperparams=thp)
                for i, nodes in enumerate(doc["trees"])
            ]
            seeds = np.array(doc["bootstrap_seeds"], dtype=np.uint64)
            model = RandomForest(trees, fhp, seeds, seed=int(doc.get("seed", 0)),
                                 bootstrap=bool(doc.get("bootstrap", True)))
        else:
            raise ValueError(f"unknown model kind {kind!r}")
    except KeyError as exc:
        raise ValueError(f"malformed model document: missing field {exc}") from exc
    model.metadata = doc.get("metadata", {})
    return model
