"""From-scratch gradient-boosted regression trees.

Squared-error CART base learners fit to residuals; prediction is
base_score + learning_rate * sum of tree outputs. No subsampling, so
training is fully deterministic.

Permutation invariance: rows are first put into a canonical order (sorted
by the 13 feature columns, then y), and every later sort is stable, so
all aggregate statistics see the same operand order no matter how the
caller ordered the rows. Predictions are then bit-identical under any row
permutation of the training set.

Split rule: thresholds sit at midpoints of consecutive distinct sorted
feature values and ties go left (x <= threshold). When the midpoint
rounds up to the right value (adjacent floats) the left value is used
instead, keeping the realized partition equal to the scanned one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import FEATURE_NAMES

__all__ = [
    "TrainParams",
    "RegressionTree",
    "GbmModel",
    "SurrogateFit",
    "TrainingError",
    "ModelFormatError",
    "fit",
    "predict",
    "predict_batch",
    "staged_predict_batch",
    "save",
    "load",
    "train_surrogate_on_synthetic",
]

FEATURE_COUNT = len(FEATURE_NAMES)


class TrainingError(ValueError):
    """Training preconditions violated (shape, emptiness, non-finite data)."""


class ModelFormatError(ValueError):
    """Serialized model is malformed; message carries the position."""


@dataclass(frozen=True)
class TrainParams:
    """Boosting hyperparameters. seed is reserved for subsampling variants
    and does not affect the deterministic default path."""

    n_trees: int = 300
    max_depth: int = 3
    learning_rate: float = 0.05
    min_samples_leaf: int = 5
    seed: int = 0

    def __post_init__(self):
        if int(self.n_trees) < 1:
            raise TrainingError(f"n_trees must be positive, got {self.n_trees}")
        if int(self.max_depth) < 1:
            raise TrainingError(f"max_depth must be positive, got {self.max_depth}")
        if not (0.0 < float(self.learning_rate) <= 1.0):
            raise TrainingError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if int(self.min_samples_leaf) < 1:
            raise TrainingError(f"min_samples_leaf must be positive, got {self.min_samples_leaf}")
        for name in ("n_trees", "max_depth", "min_samples_leaf", "seed"):
            object.__setattr__(self, name, int(getattr(self, name)))
        object.__setattr__(self, "learning_rate", float(self.learning_rate))


class RegressionTree:
    """Flat-array binary tree. ``feature[i] == -1`` marks a leaf; internal
    nodes route x[feature] <= threshold to ``left``, else ``right``."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for every row."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int32)
        active = self.feature[node] >= 0
        while active.any():
            idx = node[active]
            feat = self.feature[idx]
            go_left = X[active, feat] <= self.threshold[idx]
            node[active] = np.where(go_left, self.left[idx], self.right[idx])
            active = self.feature[node] >= 0
        return node

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


class GbmModel:
    """Immutable fitted ensemble."""

    __slots__ = ("base_score", "learning_rate", "trees", "feature_count")

    def __init__(self, base_score: float, learning_rate: float, trees,
                 feature_count: int = FEATURE_COUNT):
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.trees = tuple(trees)
        self.feature_count = int(feature_count)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise TrainingError(f"X must be 2-D, got shape {X.shape}")
    return X


class _TreeBuilder:
    """Grows one depth-limited CART on residuals by exhaustive
    variance-reduction splits."""

    def __init__(self, X, y, max_depth, min_samples_leaf):
        self.X = X
        self.y = y
        self.max_depth = max_depth
        self.min_leaf = min_samples_leaf
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []
        self.leaf_rows = []  # (node_id, row indices), for training updates

    def _new_node(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def build(self, idx: np.ndarray) -> RegressionTree:
        self._grow(idx, depth=0)
        return RegressionTree(self.feature, self.threshold, self.left,
                              self.right, self.value)

    def _grow(self, idx: np.ndarray, depth: int) -> int:
        node = self._new_node()
        split = self._best_split(idx) if depth < self.max_depth else None
        if split is None:
            self.value[node] = float(np.sum(self.y[idx]) / len(idx))
            self.leaf_rows.append((node, idx))
            return node
        j, thr = split
        go_left = self.X[idx, j] <= thr
        self.feature[node] = j
        self.threshold[node] = thr
        self.left[node] = self._grow(idx[go_left], depth + 1)
        self.right[node] = self._grow(idx[~go_left], depth + 1)
        return node

    def _best_split(self, idx: np.ndarray):
        """Highest-gain (feature, threshold), or None when nothing beats the
        parent. Gain comparisons are strict, so the first (lowest feature
        index, lowest threshold) of a tied set wins deterministically."""
        n = len(idx)
        if n < 2 * self.min_leaf:
            return None
        y = self.y[idx]
        total = float(np.sum(y))
        parent_score = total * total / n
        best_gain = 0.0
        best = None
        for j in range(self.X.shape[1]):
            xj = self.X[idx, j]
            order = np.argsort(xj, kind="stable")
            xs = xj[order]
            if xs[0] == xs[-1]:
                continue
            prefix = np.cumsum(y[order])
            # Split after position p keeps rows 0..p on the left; only
            # positions at a value change are real candidates.
            cut = np.flatnonzero(xs[:-1] < xs[1:])
            cut = cut[(cut + 1 >= self.min_leaf) & (n - cut - 1 >= self.min_leaf)]
            if not len(cut):
                continue
            left_sum = prefix[cut]
            nl = (cut + 1).astype(np.float64)
            score = left_sum**2 / nl + (total - left_sum) ** 2 / (n - nl)
            k = int(np.argmax(score))
            gain = float(score[k]) - parent_score
            if gain > best_gain:
                lo, hi = float(xs[cut[k]]), float(xs[cut[k] + 1])
                thr = (lo + hi) / 2.0
                if thr >= hi:  # midpoint rounded up to the right value
                    thr = lo
                best_gain = gain
                best = (j, thr)
        return best


def fit(X, y, params: TrainParams | None = None) -> GbmModel:
    """Train an ensemble on an (n, 13) matrix and n targets."""
    params = params or TrainParams()
    X = _as_matrix(X)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise TrainingError("training set is empty")
    if y.shape != (n,):
        raise TrainingError(f"y must have shape ({n},), got {y.shape}")
    if n < 2 * params.min_samples_leaf:
        raise TrainingError(
            f"need at least {2 * params.min_samples_leaf} rows "
            f"(2 * min_samples_leaf), got {n}"
        )
    if not np.all(np.isfinite(X)):
        raise TrainingError("X contains non-finite values")
    if not np.all(np.isfinite(y)):
        raise TrainingError("y contains non-finite values")

    # Canonical row order; see module docstring.
    order = np.lexsort((y,) + tuple(X[:, j] for j in range(X.shape[1] - 1, -1, -1)))
    Xc = X[order]
    yc = y[order]

    base = float(np.sum(yc) / n)
    residual = yc - base
    all_rows = np.arange(n)
    trees = []
    for _ in range(params.n_trees):
        builder = _TreeBuilder(Xc, residual, params.max_depth, params.min_samples_leaf)
        trees.append(builder.build(all_rows))
        for node, rows in builder.leaf_rows:
            residual[rows] -= params.learning_rate * builder.value[node]
    return GbmModel(base, params.learning_rate, trees, feature_count=X.shape[1])


def _check_width(model: GbmModel, X: np.ndarray) -> None:
    if X.shape[1] != model.feature_count:
        raise TrainingError(
            f"model expects {model.feature_count} features, got {X.shape[1]}"
        )


def predict_batch(model: GbmModel, X) -> np.ndarray:
    """Vectorized prediction for an (n, feature_count) matrix."""
    X = _as_matrix(X)
    _check_width(model, X)
    out = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        out += model.learning_rate * tree.predict_batch(X)
    return out


def predict(model: GbmModel, x) -> float:
    """Prediction for one feature vector (anything 13-float-array-like)."""
    x = np.asarray(getattr(x, "as_array", lambda: x)(), dtype=np.float64)
    if x.shape != (model.feature_count,):
        raise TrainingError(
            f"model expects {model.feature_count} features, got shape {x.shape}"
        )
    return float(predict_batch(model, x[None, :])[0])


def staged_predict_batch(model: GbmModel, X) -> np.ndarray:
    """Predictions after 0..n_trees trees; shape (n_trees + 1, n)."""
    X = _as_matrix(X)
    _check_width(model, X)
    out = np.empty((len(model.trees) + 1, X.shape[0]))
    acc = np.full(X.shape[0], model.base_score)
    out[0] = acc
    for t, tree in enumerate(model.trees):
        acc = acc + model.learning_rate * tree.predict_batch(X)
        out[t + 1] = acc
    return out


# -- serialization ----------------------------------------------------------

_FORMAT = "bedtwin-gbm"
_VERSION = 1


def save(model: GbmModel) -> bytes:
    """Versioned JSON document; floats round-trip exactly via repr."""
    doc = {
        "format": _FORMAT,
        "version": _VERSION,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "feature_count": model.feature_count,
        "trees": [
            {
                "feature": tree.feature.tolist(),
                "threshold": tree.threshold.tolist(),
                "left": tree.left.tolist(),
                "right": tree.right.tolist(),
                "value": tree.value.tolist(),
            }
            for tree in model.trees
        ],
    }
    return json.dumps(doc).encode("utf-8")


def _expect(doc: dict, key: str, kinds, where: str):
    if key not in doc:
        raise ModelFormatError(f"missing '{key}' at {where}")
    v = doc[key]
    if not isinstance(v, kinds):
        raise ModelFormatError(f"bad type for '{key}' at {where}: {type(v).__name__}")
    return v


def load(data: bytes) -> GbmModel:
    """Inverse of :func:`save`; raises ModelFormatError with the position of
    the first defect."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON at position {exc.pos}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("document root must be an object")
    if doc.get("format") != _FORMAT:
        raise ModelFormatError(f"unknown format {doc.get('format')!r} at root")
    if doc.get("version") != _VERSION:
        raise ModelFormatError(f"unsupported version {doc.get('version')!r} at root")
    base = _expect(doc, "base_score", (int, float), "root")
    lr = _expect(doc, "learning_rate", (int, float), "root")
    width = _expect(doc, "feature_count", int, "root")
    raw_trees = _expect(doc, "trees", list, "root")

    trees = []
    for t, raw in enumerate(raw_trees):
        where = f"trees[{t}]"
        if not isinstance(raw, dict):
            raise ModelFormatError(f"bad type at {where}: {type(raw).__name__}")
        cols = {
            key: _expect(raw, key, list, where)
            for key in ("feature", "threshold", "left", "right", "value")
        }
        sizes = {len(v) for v in cols.values()}
        if len(sizes) != 1:
            raise ModelFormatError(f"ragged node arrays at {where}")
        size = sizes.pop()
        if size == 0:
            raise ModelFormatError(f"empty tree at {where}")
        try:
            tree = RegressionTree(**cols)
        except (TypeError, ValueError) as exc:
            raise ModelFormatError(f"non-numeric node arrays at {where}") from exc
        for i in range(size):
            where_i = f"{where}.nodes[{i}]"
            f = int(tree.feature[i])
            if f >= width:
                raise ModelFormatError(f"feature index {f} out of range at {where_i}")
            if f >= 0:
                # Children must point forward; rules out cycles so prediction
                # always terminates.
                for child in (int(tree.left[i]), int(tree.right[i])):
                    if not (i < child < size):
                        raise ModelFormatError(f"bad child link {child} at {where_i}")
            if not math.isfinite(float(tree.value[i])):
                raise ModelFormatError(f"non-finite leaf value at {where_i}")
        trees.append(tree)
    return GbmModel(base, lr, trees, feature_count=width)


# -- surrogate training on sweep output --------------------------------------

MIN_SWEEP_ROWS = 50


@dataclass(frozen=True)
class SurrogateFit:
    """A fitted surrogate with its held-out quality measures.

    target_sd is the sample SD of the simulated-BTT targets over the whole
    sweep, the yardstick for "small" MAE; baseline_mae is the held-out MAE
    of always predicting the training mean."""

    model: GbmModel
    holdout_mae: float
    baseline_mae: float
    target_sd: float
    n_train: int
    n_holdout: int


def train_surrogate_on_synthetic(sweep_output, params: TrainParams | None = None,
                                 holdout_fraction: float = 0.2,
                                 split_seed: int = 0) -> SurrogateFit:
    """Fit a surrogate to sweep rows [(FeatureVector, ScenarioResult), ...].

    Targets are the simulated mean BTTs. A seeded 20% holdout measures MAE
    against the predict-the-training-mean baseline.
    """
    rows = list(sweep_output)
    if len(rows) < MIN_SWEEP_ROWS:
        raise TrainingError(f"need at least {MIN_SWEEP_ROWS} sweep rows, got {len(rows)}")
    X = np.empty((len(rows), FEATURE_COUNT))
    y = np.empty(len(rows))
    for i, (features, result) in enumerate(rows):
        X[i] = features.as_array()
        target = getattr(result, "mean_btt", result)
        if target is None or not math.isfinite(float(target)):
            raise TrainingError(f"sweep row {i} has no finite mean BTT")
        y[i] = float(target)

    rng = np.random.default_rng(split_seed)
    perm = rng.permutation(len(rows))
    n_holdout = max(1, int(round(len(rows) * holdout_fraction)))
    hold, train = perm[:n_holdout], perm[n_holdout:]
    if len(train) == 0:
        raise TrainingError("holdout fraction leaves no training rows")

    model = fit(X[train], y[train], params)
    pred = predict_batch(model, X[hold])
    holdout_mae = float(np.mean(np.abs(y[hold] - pred)))
    baseline_mae = float(np.mean(np.abs(y[hold] - y[train].mean())))
    target_sd = float(np.std(y, ddof=1)) if len(rows) > 1 else 0.0
    return SurrogateFit(model=model, holdout_mae=holdout_mae,
                        baseline_mae=baseline_mae, target_sd=target_sd,
                        n_train=int(len(train)), n_holdout=int(n_holdout))
