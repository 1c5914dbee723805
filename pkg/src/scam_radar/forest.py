"""Random forest of CART trees (gini), majority vote, and stratified k-fold evaluation."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateDataset, InsufficientData
from .features import FEATURE_NAMES, N_FEATURES

MODEL_FORMAT = "scam-radar-forest"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    n_trees: int = 100
    max_depth: int | None = None  # unbounded
    min_leaf: int = 1
    features_per_split: int = int(math.sqrt(N_FEATURES))
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if not 1 <= self.features_per_split <= N_FEATURES:
            raise ValueError(f"features_per_split must be in [1, {N_FEATURES}]")


@dataclass(frozen=True)
class DecisionTree:
    """Flattened tree. Leaves have ``feature == -1``; ``value`` holds class counts."""

    feature: np.ndarray  # int64
    threshold: np.ndarray  # float64
    left: np.ndarray  # int64
    right: np.ndarray  # int64
    value: np.ndarray  # (n_nodes, 2) float64

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def depth(self) -> int:
        deepest = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            deepest = max(deepest, d)
            if self.feature[node] >= 0:
                stack.append((int(self.left[node]), d + 1))
                stack.append((int(self.right[node]), d + 1))
        return deepest

    def leaf_votes(self) -> np.ndarray:
        """Per-node vote, 1 where scam strictly outnumbers non-scam."""
        return (self.value[:, 1] > self.value[:, 0]).astype(np.int64)

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_json(cls, d: dict) -> DecisionTree:
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64).reshape(-1, 2),
        )


def grow_tree(X: np.ndarray, y: np.ndarray, rows: np.ndarray, rng: np.random.Generator,
              params: Hyperparams) -> DecisionTree:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        pos = int(y[idx].sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append((float(idx.shape[0] - pos), float(pos)))
        return len(feature) - 1

    stack = [(new_node(rows), rows, 0)]
    n_features = X.shape[1]
    while stack:
        node, idx, depth = stack.pop()
        neg, pos = value[node]
        if neg == 0 or pos == 0:
            continue
        if params.max_depth is not None and depth >= params.max_depth:
            continue
        if idx.shape[0] < 2 * params.min_leaf:
            continue
        order = rng.permutation(n_features).astype(np.int64)
        f, thr = kernels.best_split(X, y, idx, order, params.features_per_split, params.min_leaf)
        if f < 0:
            continue
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = int(f)
        threshold[node] = float(thr)
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is grown first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64).reshape(-1, 2),
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    hyperparams: Hyperparams
    feature_order: tuple[str, ...] = FEATURE_NAMES

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = _as_matrix(X)
        total = np.zeros(X.shape[0], dtype=np.int64)
        for tree in self.trees:
            leaves = kernels.apply_tree(tree.feature, tree.threshold, tree.left, tree.right, X)
            total += tree.leaf_votes()[leaves]
        return total

    def predict_many(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Labels (1 = scam) and scam-vote fractions. A tied vote is non-scam."""
        scam = self.votes(X)
        n = len(self.trees)
        return (2 * scam > n).astype(np.int64), scam / n

    def to_json(self) -> str:
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "hyperparams": asdict(self.hyperparams),
            "feature_order": list(self.feature_order),
            "trees": [t.to_json() for t in self.trees],
        }
        return json.dumps(doc, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ForestModel:
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
            raise ValueError("not a scam-radar forest model (or unsupported version)")
        if tuple(doc["feature_order"]) != FEATURE_NAMES:
            raise ValueError("model feature order does not match this build")
        return cls(
            trees=tuple(DecisionTree.from_json(t) for t in doc["trees"]),
            hyperparams=Hyperparams(**doc["hyperparams"]),
            feature_order=tuple(doc["feature_order"]),
        )


def _as_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} feature columns, got {X.shape[1]}")
    return X


def train(X, y, params: Hyperparams | None = None, seed: int | None = None, jobs: int = 1) -> ForestModel:
    """Fit ``params.n_trees`` trees on bootstrap samples. Deterministic given the seed.

    Each tree owns its RNG stream, so ``jobs`` (threads) never changes the result.
    """
    params = params or Hyperparams()
    if seed is not None and seed != params.rng_seed:
        params = Hyperparams(**{**asdict(params), "rng_seed": seed})
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.int8)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y lengths differ")
    if X.shape[0] < 2:
        raise DegenerateDataset("need at least 2 rows")
    if np.isnan(X).any():
        raise ValueError("feature matrix contains NaN; encode missing values as -1")
    if not set(np.unique(y).tolist()) == {0, 1}:
        raise DegenerateDataset("training data must contain both classes")
    n = X.shape[0]

    def one(child):
        rng = np.random.default_rng(child)
        rows = rng.integers(0, n, size=n).astype(np.int64)
        return grow_tree(X, y, rows, rng, params)

    children = np.random.SeedSequence(params.rng_seed).spawn(params.n_trees)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trees = list(pool.map(one, children))
    else:
        trees = [one(c) for c in children]
    return ForestModel(tuple(trees), params)


def predict(model: ForestModel, vector) -> tuple[int, float]:
    """(label, scam-vote fraction) for one feature vector."""
    values = getattr(vector, "values", vector)
    labels, scores = model.predict_many(np.asarray(values, dtype=np.float64).reshape(1, -1))
    return int(labels[0]), float(scores[0])


# --------------------------------------------------------------------------- evaluation

@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: Metrics) -> Metrics:
        return Metrics(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @classmethod
    def from_predictions(cls, truth, predicted) -> Metrics:
        truth = np.asarray(truth)
        predicted = np.asarray(predicted)
        return cls(
            tp=int(((truth == 1) & (predicted == 1)).sum()),
            fp=int(((truth == 0) & (predicted == 1)).sum()),
            fn=int(((truth == 1) & (predicted == 0)).sum()),
            tn=int(((truth == 0) & (predicted == 0)).sum()),
        )

    def to_json(self) -> dict:
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
        }


@dataclass
class EvalReport:
    folds: list[Metrics]
    hyperparams: Hyperparams
    k: int
    seed: int
    aggregate: Metrics = field(init=False)

    def __post_init__(self):
        total = Metrics(0, 0, 0, 0)
        for m in self.folds:
            total = total + m
        self.aggregate = total

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "hyperparams": asdict(self.hyperparams),
            "aggregate": self.aggregate.to_json(),
            "mean_fold": {
                "precision": float(np.mean([m.precision for m in self.folds])),
                "recall": float(np.mean([m.recall for m in self.folds])),
                "f1": float(np.mean([m.f1 for m in self.folds])),
            },
            "folds": [m.to_json() for m in self.folds],
        }


def stratified_folds(y, k: int, seed: int) -> list[np.ndarray]:
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        members = members[rng.permutation(members.shape[0])]
        for j, row in enumerate(members):
            buckets[(offset + j) % k].append(int(row))
        offset += members.shape[0]
    return [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]


def cross_validate(X, y, params: Hyperparams | None = None, k: int = 10, seed: int = 0,
                   jobs: int = 1) -> EvalReport:
    """Stratified k-fold: train on k-1 folds, score the held-out fold."""
    params = params or Hyperparams()
    if k < 2:
        raise ValueError("k must be >= 2")
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.int8)
    if X.shape[0] < k:
        raise InsufficientData(f"{X.shape[0]} rows cannot fill {k} folds")
    for cls in (0, 1):
        if int((y == cls).sum()) < k:
            raise InsufficientData(f"class {cls} has fewer than {k} rows; some fold would lack it")
    folds = stratified_folds(y, k, seed)
    results = []
    for i, test in enumerate(folds):
        train_rows = np.concatenate([f for j, f in enumerate(folds) if j != i])
        model = train(X[train_rows], y[train_rows], params, seed=seed * 1000 + i, jobs=jobs)
        predicted, _ = model.predict_many(X[test])
        results.append(Metrics.from_predictions(y[test], predicted))
    return EvalReport(results, params, k, seed)


# --------------------------------------------------------------------------- baseline

class LogisticBaseline:
    """Optional reference model: L2 logistic regression by full-batch gradient descent."""

    def __init__(self, l2: float = 1e-3, steps: int = 500, lr: float = 0.5):
        self.l2, self.steps, self.lr = l2, steps, lr

    def fit(self, X, y) -> LogisticBaseline:
        X = _as_matrix(X)
        y = np.asarray(y, dtype=np.float64)
        self.mu = X.mean(axis=0)
        self.sd = X.std(axis=0)
        self.sd[self.sd == 0] = 1.0
        Z = (X - self.mu) / self.sd
        self.w = np.zeros(Z.shape[1])
        self.b = 0.0
        for _ in range(self.steps):
            p = 1 / (1 + np.exp(-(Z @ self.w + self.b)))
            g = p - y
            self.w -= self.lr * (Z.T @ g / len(y) + self.l2 * self.w)
            self.b -= self.lr * g.mean()
        return self

    def predict(self, X) -> np.ndarray:
        Z = (_as_matrix(X) - self.mu) / self.sd
        return (Z @ self.w + self.b > 0).astype(np.int64)
