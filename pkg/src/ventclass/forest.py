"""From-scratch random forest for 5-class per-breath classification.

30 CART trees by default, Gini impurity, bootstrap per tree, mtry features
sampled per node. Training is deterministic given (features, labels, seed):
each tree gets its own RNG stream seeded by seed ^ tree_index, so serial
and parallel training produce bit-identical models.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .core import CLASS_ORDER, N_CLASSES, VentMode
from .errors import ConfigError, ModelFormatError, VersionMismatchError

FORMAT_VERSION = 1
N_FEATURES = 7


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 30
    mtry: int = 2  # floor(sqrt(7))
    min_samples_leaf: int = 1
    max_depth: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.mtry <= N_FEATURES):
            raise ConfigError(f"mtry must be in [1, {N_FEATURES}]")
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")


@dataclass
class Tree:
    """Flat-array tree. feature == -1 marks a leaf; children are node indices."""

    feature: np.ndarray     # int32, -1 for leaves
    threshold: np.ndarray   # float64, 0.0 for leaves
    left: np.ndarray        # int32, -1 for leaves
    right: np.ndarray       # int32, -1 for leaves
    class_counts: np.ndarray  # (n_nodes, N_CLASSES) int64, training counts

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def leaf_classes(self) -> np.ndarray:
        """Majority class per node (ties to lowest class index)."""
        return np.argmax(self.class_counts, axis=1).astype(np.int32)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for each row, via vectorized level descent."""
        node = np.zeros(X.shape[0], dtype=np.int32)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            a_node = node[active]
            go_left = X[rows[active], feat[active]] <= self.threshold[a_node]
            node[active] = np.where(go_left, self.left[a_node],
                                    self.right[a_node])


@dataclass
class RandomForestModel:
    trees: list[Tree]
    classes: tuple[VentMode, ...]
    config: ForestConfig
    format_version: int = FORMAT_VERSION


def _grow_tree(X: np.ndarray, y: np.ndarray, config: ForestConfig,
               tree_index: int) -> Tree:
    rng = np.random.default_rng(config.seed ^ tree_index)
    n = X.shape[0]
    boot = rng.integers(0, n, size=n)
    Xb = X[boot]
    yb = y[boot]

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[np.ndarray] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(None)  # type: ignore[arg-type]
        return len(feature) - 1

    # preorder: pop left child before right
    root = new_node()
    stack: list[tuple[np.ndarray, int, int]] = [(np.arange(n), 0, root)]
    max_depth = config.max_depth if config.max_depth is not None else np.inf
    min_leaf = config.min_samples_leaf
    while stack:
        idx, depth, slot = stack.pop()
        ysub = yb[idx]
        counts[slot] = np.bincount(ysub, minlength=N_CLASSES).astype(np.int64)
        if depth >= max_depth or idx.size < 2 * min_leaf or \
                (ysub == ysub[0]).all():
            continue
        best_score = -1.0
        best_feat = -1
        best_lo = best_hi = 0.0
        for f in rng.permutation(N_FEATURES)[:config.mtry]:
            vals = Xb[idx, f]
            order = np.argsort(vals)
            score, pos = kernels.best_split(
                np.ascontiguousarray(vals[order]),
                np.ascontiguousarray(ysub[order]), N_CLASSES, min_leaf)
            if pos >= 0 and score > best_score:
                best_score = score
                best_feat = int(f)
                best_lo = float(vals[order[pos]])
                best_hi = float(vals[order[pos + 1]])
        if best_feat < 0:
            continue
        thr = best_lo + 0.5 * (best_hi - best_lo)
        if thr >= best_hi:  # midpoint rounding collapsed onto the upper value
            thr = best_lo
        mask = Xb[idx, best_feat] <= thr
        feature[slot] = best_feat
        threshold[slot] = thr
        lslot = new_node()
        rslot = new_node()
        left[slot] = lslot
        right[slot] = rslot
        stack.append((idx[~mask], depth + 1, rslot))
        stack.append((idx[mask], depth + 1, lslot))

    return Tree(feature=np.array(feature, dtype=np.int32),
                threshold=np.array(threshold, dtype=np.float64),
                left=np.array(left, dtype=np.int32),
                right=np.array(right, dtype=np.int32),
                class_counts=np.vstack(counts))


def train_forest(X: np.ndarray, y: np.ndarray,
                 config: ForestConfig | None = None,
                 threads: int = 1) -> RandomForestModel:
    """Train on an (N, 7) feature matrix and int64 class indices.

    y may also be a sequence of VentMode values.
    """
    config = config or ForestConfig()
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.size == 0:
        raise ConfigError("empty training set")
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise ConfigError(f"expected (N, {N_FEATURES}) features, got {X.shape}")
    if not isinstance(y, np.ndarray) or y.dtype.kind != "i":
        from .core import modes_to_indices
        y = modes_to_indices(list(y))
    y = np.ascontiguousarray(y, dtype=np.int64)
    bad = ~np.isfinite(X)
    if bad.any():
        row = int(np.nonzero(bad.any(axis=1))[0][0])
        raise ConfigError(f"non-finite feature value at row {row}")
    if ((y < 0) | (y >= N_CLASSES)).any():
        raise ConfigError("labels outside the fixed class set")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(lambda t: _grow_tree(X, y, config, t),
                                  range(config.n_trees)))
    else:
        trees = [_grow_tree(X, y, config, t) for t in range(config.n_trees)]
    return RandomForestModel(trees=trees, classes=CLASS_ORDER, config=config)


def predict_batch(model: RandomForestModel,
                  X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(predicted class indices, vote fractions) for an (N, 7) matrix.

    Each tree votes its leaf's majority class; the forest takes the
    plurality, all ties breaking to the lowest class index.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise ConfigError(f"expected (N, {N_FEATURES}) features, got {X.shape}")
    if not np.isfinite(X).all():
        raise ConfigError("non-finite feature value")
    votes = np.zeros((X.shape[0], N_CLASSES), dtype=np.int64)
    rows = np.arange(X.shape[0])
    for tree in model.trees:
        leaf_cls = tree.leaf_classes()[tree.apply(X)]
        votes[rows, leaf_cls] += 1
    pred = np.argmax(votes, axis=1)
    return pred, votes / float(len(model.trees))


def predict(model: RandomForestModel,
            feature_vector: np.ndarray) -> tuple[VentMode, np.ndarray]:
    """(mode, vote fractions summing to 1) for a single 7-vector."""
    vec = np.asarray(feature_vector, dtype=np.float64).reshape(1, N_FEATURES)
    pred, frac = predict_batch(model, vec)
    return CLASS_ORDER[int(pred[0])], frac[0]


# --- serialization: versioned JSON document, schema in docs/model_format.md ---

def serialize_model(model: RandomForestModel, sink) -> None:
    doc = {
        "format_version": model.format_version,
        "config": asdict(model.config),
        "classes": [m.value for m in model.classes],
        "trees": [{
            "feature": t.feature.tolist(),
            "threshold": t.threshold.tolist(),
            "left": t.left.tolist(),
            "right": t.right.tolist(),
            "class_counts": t.class_counts.tolist(),
        } for t in model.trees],
    }
    json.dump(doc, sink, sort_keys=True, separators=(",", ":"))


def deserialize_model(source) -> RandomForestModel:
    try:
        doc = json.load(source)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ModelFormatError(f"unreadable model document: {e}") from e
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError("missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(
            f"model format {doc['format_version']} != supported {FORMAT_VERSION}")
    try:
        config = ForestConfig(**doc["config"])
        classes = tuple(VentMode(c) for c in doc["classes"])
        trees = [Tree(feature=np.array(t["feature"], dtype=np.int32),
                      threshold=np.array(t["threshold"], dtype=np.float64),
                      left=np.array(t["left"], dtype=np.int32),
                      right=np.array(t["right"], dtype=np.int32),
                      class_counts=np.array(t["class_counts"], dtype=np.int64))
                 for t in doc["trees"]]
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"malformed model document: {e}") from e
    return RandomForestModel(trees=trees, classes=classes, config=config,
                             format_version=doc["format_version"])
