"""Gradient-boosted regression trees with a multiclass softmax objective.

Each round fits one tree per class to the first and second derivatives of
the cross-entropy (Newton boosting with L2-regularized leaf weights), using
exact greedy split search over the sorted unique values of each feature.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import ClassTooSmall, DegenerateDataset, ModelFileError

N_CLASSES = 4
FORMAT_VERSION = 1


@dataclass(frozen=True)
class BoostConfig:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_leaf: int = 2
    lambda_l2: float = 1.0
    seed: int = 0

    def validate(self):
        if self.n_rounds < 0 or self.learning_rate <= 0 or self.max_depth < 1:
            raise ValueError("n_rounds >= 0, learning_rate > 0 and max_depth >= 1 required")
        if self.min_leaf < 1 or self.lambda_l2 < 0:
            raise ValueError("min_leaf >= 1 and lambda_l2 >= 0 required")


@dataclass
class Tree:
    """Flat binary tree; node 0 is the root, ``feature == -1`` marks a leaf.

    Samples with ``x[feature] < threshold`` go left.
    """

    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    gain: list = field(default_factory=list)

    def _add(self, feature=-1, threshold=0.0, value=0.0, gain=0.0) -> int:
        self.feature.append(int(feature))
        self.threshold.append(float(threshold))
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.gain.append(float(gain))
        return len(self.feature) - 1

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(X))
        node = np.zeros(len(X), dtype=int)
        active = np.ones(len(X), dtype=bool)
        feat = np.array(self.feature)
        thr = np.array(self.threshold)
        left = np.array(self.left)
        right = np.array(self.right)
        while active.any():
            idx = np.flatnonzero(active)
            f = feat[node[idx]]
            leaf = f < 0
            out[idx[leaf]] = np.array(self.value)[node[idx[leaf]]]
            active[idx[leaf]] = False
            go = idx[~leaf]
            n = node[go]
            node[go] = np.where(X[go, feat[n]] < thr[n], left[n], right[n])
        return out

    def to_text(self, names: Optional[Sequence[str]] = None, node: int = 0, depth: int = 0) -> str:
        pad = "  " * depth
        f = self.feature[node]
        if f < 0:
            return f"{pad}leaf value={self.value[node]!r}\n"
        name = names[f] if names else f"f{f}"
        return (
            f"{pad}[{name} < {self.threshold[node]!r}] gain={self.gain[node]:.6g}\n"
            + self.to_text(names, self.left[node], depth + 1)
            + self.to_text(names, self.right[node], depth + 1)
        )


@dataclass
class TreeEnsemble:
    base_score: np.ndarray
    trees: list  # trees[k] is the sequence of trees for class k
    learning_rate: float
    config: BoostConfig = BoostConfig()
    n_features: int = 0

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        F = np.tile(np.asarray(self.base_score, dtype=float), (len(X), 1))
        for k, seq in enumerate(self.trees):
            for tree in seq:
                F[:, k] += self.learning_rate * tree.apply(X)
        return F

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self.decision_function(X))


def _softmax(F):
    F = F - F.max(axis=1, keepdims=True)
    e = np.exp(F)
    return e / e.sum(axis=1, keepdims=True)


def log_loss(P, y) -> float:
    return -float(np.mean(np.log(np.clip(P[np.arange(len(y)), y], 1e-300, None))))


# -- tree growing ------------------------------------------------------------


def best_split(X, g, h, idx, lam, min_leaf):
    """Exact greedy search; returns (gain, feature, threshold) or None.

    Ties in gain go to the lower feature index, then the lower threshold.
    """
    G, Hs = g[idx].sum(), h[idx].sum()
    parent = G * G / (Hs + lam)
    best = None
    for f in range(X.shape[1]):
        order = idx[np.argsort(X[idx, f], kind="stable")]
        xs = X[order, f]
        gl = np.cumsum(g[order])[:-1]
        hl = np.cumsum(h[order])[:-1]
        n_left = np.arange(1, len(order))
        ok = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (len(order) - n_left >= min_leaf)
        if not ok.any():
            continue
        gr, hr = G - gl, Hs - hl
        gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
        gain = np.where(ok, gain, -np.inf)
        j = int(np.argmax(gain))
        if best is None or gain[j] > best[0]:
            mid = xs[j] + (xs[j + 1] - xs[j]) / 2.0
            thr = mid if mid > xs[j] else xs[j + 1]
            best = (float(gain[j]), f, float(thr))
    if best is None or not best[0] > 0:
        return None
    return best


def grow_tree(X, g, h, cfg: BoostConfig) -> Tree:
    tree = Tree()
    lam = cfg.lambda_l2

    def leaf_value(idx):
        return -g[idx].sum() / (h[idx].sum() + lam)

    def build(idx, depth):
        split = None
        if depth < cfg.max_depth and len(idx) >= 2 * cfg.min_leaf:
            split = best_split(X, g, h, idx, lam, cfg.min_leaf)
        if split is None:
            return tree._add(value=leaf_value(idx))
        gain, f, thr = split
        node = tree._add(feature=f, threshold=thr, gain=gain)
        go_left = X[idx, f] < thr
        tree.left[node] = build(idx[go_left], depth + 1)
        tree.right[node] = build(idx[~go_left], depth + 1)
        return node

    build(np.arange(len(X)), 0)
    return tree


def fit_ensemble(X, y, cfg: BoostConfig = BoostConfig(), n_classes: int = N_CLASSES,
                 loss_trace: Optional[list] = None) -> TreeEnsemble:
    """Boost ``cfg.n_rounds`` rounds; base scores are log class priors."""
    cfg.validate()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(np.unique(y)) < 2:
        raise DegenerateDataset("need at least two distinct classes")
    if not np.isfinite(X).all():
        raise DegenerateDataset("non-finite feature values")
    counts = np.bincount(y, minlength=n_classes).astype(float)
    base = np.log(np.maximum(counts, 1e-3) / len(y))
    ens = TreeEnsemble(base, [[] for _ in range(n_classes)], cfg.learning_rate, cfg, X.shape[1])
    F = np.tile(base, (len(X), 1))
    Y = np.eye(n_classes)[y]
    if loss_trace is not None:
        loss_trace.append(log_loss(_softmax(F), y))
    for _ in range(cfg.n_rounds):
        P = _softmax(F)
        grad = P - Y
        hess = np.maximum(P * (1.0 - P), 1e-16)
        for k in range(n_classes):
            tree = grow_tree(X, grad[:, k], hess[:, k], cfg)
            ens.trees[k].append(tree)
            F[:, k] += cfg.learning_rate * tree.apply(X)
        if loss_trace is not None:
            loss_trace.append(log_loss(_softmax(F), y))
    return ens


# -- feature layout ----------------------------------------------------------

BOOST_FEATURE_NAMES = (
    "mean_amp", "rsd_amp", "mean_int", "rsd_int", "fatigue",
    "arrest_0", "arrest_1", "arrest_2", "arrest_3",
)


def expand_features(F) -> np.ndarray:
    """``(n, 6)`` feature matrix (arrest last) -> ``(n, 9)`` with one-hot arrest."""
    if hasattr(F, "as_array"):
        F = F.as_array()[None]
    F = np.atleast_2d(np.asarray([f.as_array() if hasattr(f, "as_array") else f for f in F],
                                 dtype=float))
    arrest = F[:, 5].astype(int)
    if ((arrest < 0) | (arrest > 3)).any():
        raise ValueError("arrest category must be in 0..3")
    return np.hstack([F[:, :5], np.eye(4)[arrest]])


def fit(data, cfg: BoostConfig = BoostConfig()) -> TreeEnsemble:
    """Fit on ``(FeatureVector, score)`` pairs."""
    feats = [f for f, _ in data]
    y = [s for _, s in data]
    return fit_ensemble(expand_features(feats), y, cfg)


def predict(m: TreeEnsemble, f) -> tuple[int, np.ndarray]:
    x = expand_features(f) if hasattr(f, "as_array") else np.atleast_2d(f)
    probs = m.predict_proba(x)[0]
    return int(np.argmax(probs)), probs


# -- serialization -----------------------------------------------------------


def dumps_ensemble(m: TreeEnsemble) -> str:
    doc = {
        "format": "bradyquant-trees",
        "version": FORMAT_VERSION,
        "config": asdict(m.config),
        "n_features": m.n_features,
        "learning_rate": m.learning_rate,
        "base_score": [float(v) for v in m.base_score],
        "trees": [[asdict(t) for t in seq] for seq in m.trees],
    }
    return json.dumps(doc, sort_keys=True)


def loads_ensemble(text: str) -> TreeEnsemble:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"corrupt tree model: {exc.msg}") from None
    if doc.get("format") != "bradyquant-trees" or doc.get("version") != FORMAT_VERSION:
        raise ModelFileError("unsupported tree model format/version")
    trees = [[Tree(**t) for t in seq] for seq in doc["trees"]]
    return TreeEnsemble(np.array(doc["base_score"]), trees, doc["learning_rate"],
                        BoostConfig(**doc["config"]), doc["n_features"])


def export_text(m: TreeEnsemble, names: Optional[Sequence[str]] = None) -> str:
    out = [f"base_score={[float(v) for v in m.base_score]} learning_rate={m.learning_rate}"]
    for k, seq in enumerate(m.trees):
        for r, tree in enumerate(seq):
            out.append(f"# class {k} round {r}")
            out.append(tree.to_text(names).rstrip("\n"))
    return "\n".join(out) + "\n"


# -- stratified folds --------------------------------------------------------


@dataclass
class FoldPlan:
    folds: list  # test indices per fold

    def splits(self):
        n = sum(len(f) for f in self.folds)
        for test in self.folds:
            train = np.setdiff1d(np.arange(n), test)
            yield train, test


def stratified_kfold(labels, k: int = 5, seed: int = 0, keys=None) -> FoldPlan:
    """Stratified assignment of items to ``k`` folds.

    Members of each class are shuffled and dealt round-robin, continuing the
    deal across classes so fold sizes stay balanced.  When ``keys`` are given
    the items are first put in key order, which makes fold membership
    independent of the input order.
    """
    labels = np.asarray(labels)
    n = len(labels)
    order = np.arange(n)
    if keys is not None:
        order = np.array(sorted(range(n), key=lambda i: (keys[i], labels[i])), dtype=int)
    rng = np.random.default_rng(seed)
    assign = np.empty(n, dtype=int)
    offset = 0
    for cls in np.unique(labels):
        members = order[labels[order] == cls]
        if len(members) < k:
            raise ClassTooSmall(f"class {cls} has {len(members)} members, fewer than k={k}")
        members = members[rng.permutation(len(members))]
        assign[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return FoldPlan([np.flatnonzero(assign == f) for f in range(k)])


class StratifiedFolds:
    """CV splitter usable wherever scikit-learn accepts ``cv=``."""

    def __init__(self, n_splits=5, seed=0):
        self.n_splits = n_splits
        self.seed = seed

    def get_n_splits(self, X=None, y=None, groups=None):
        return self.n_splits

    def split(self, X, y, groups=None):
        yield from stratified_kfold(y, self.n_splits, self.seed).splits()


# -- estimator ---------------------------------------------------------------


class OrdinalBoostClassifier(ClassifierMixin, BaseEstimator):
    """Boosted-tree scorer for the four severity levels 0-3.

    Works on any numeric matrix; for the full feature set pass the output of
    :func:`expand_features`.
    """

    def __init__(self, n_rounds=100, learning_rate=0.1, max_depth=3, min_leaf=2,
                 lambda_l2=1.0, seed=0):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.lambda_l2 = lambda_l2
        self.seed = seed

    def _config(self):
        return BoostConfig(self.n_rounds, self.learning_rate, self.max_depth,
                           self.min_leaf, self.lambda_l2, self.seed)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        y = y.astype(int)
        if ((y < 0) | (y >= N_CLASSES)).any():
            raise ValueError("labels must be in 0..3")
        trace = []
        self.ensemble_ = fit_ensemble(X, y, self._config(), loss_trace=trace)
        self.train_loss_ = trace
        self.classes_ = np.arange(N_CLASSES)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "ensemble_")
        X = check_array(X, dtype=float)
        return self.ensemble_.predict_proba(X)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)
