"""Regression trees grown top-down on residual sum of squares, with cost-complexity pruning."""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np

from forecast_impact.errors import UnsupportedHyperparameterError
from forecast_impact.learners import export
from forecast_impact.learners.utils import Regressor, check_xy, frozen


log = logging.getLogger(__name__)

SplitMode = Literal["exhaustive", "random"]
LEAF = -1


def n_split_features(features_per_split: int | float | None, n_features: int) -> int:
    """Resolve a feature-bagging setting (count, fraction or None for all) to a count."""
    if features_per_split is None:
        return n_features
    if isinstance(features_per_split, float) and features_per_split <= 1.0:
        return max(1, int(features_per_split * n_features))
    return max(1, min(n_features, int(features_per_split)))


def _exhaustive_split(x: np.ndarray, y: np.ndarray, min_samples_leaf: int) -> tuple[float, float] | None:
    n = len(y)
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    sums, squares = np.cumsum(ys), np.cumsum(ys * ys)
    sizes = np.arange(min_samples_leaf, n - min_samples_leaf + 1)
    sizes = sizes[xs[sizes - 1] < xs[sizes]]
    if not sizes.size:
        return None
    left = squares[sizes - 1] - sums[sizes - 1] ** 2 / sizes
    right = (squares[-1] - squares[sizes - 1]) - (sums[-1] - sums[sizes - 1]) ** 2 / (n - sizes)
    rss = np.maximum(left, 0.0) + np.maximum(right, 0.0)
    best = int(np.argmin(rss))
    below, above = xs[sizes[best] - 1], xs[sizes[best]]
    threshold = (below + above) / 2.0
    if threshold >= above:
        threshold = below
    return float(rss[best]), float(threshold)


def _random_split(
    X: np.ndarray,
    y: np.ndarray,
    features: np.ndarray,
    min_samples_leaf: int,
    rng: np.random.Generator,
) -> tuple[int, float, float] | None:
    columns = X[:, features]
    low, high = columns.min(axis=0), columns.max(axis=0)
    thresholds = rng.uniform(low, high)
    goes_left = columns <= thresholds
    n_left = goes_left.sum(axis=0)
    n_right = len(y) - n_left
    valid = (low < high) & (n_left >= min_samples_leaf) & (n_right >= min_samples_leaf)
    if not valid.any():
        return None
    sum_left, square_left = y @ goes_left, (y * y) @ goes_left
    sum_right, square_right = y.sum() - sum_left, (y * y).sum() - square_left
    with np.errstate(divide="ignore", invalid="ignore"):
        rss = (square_left - sum_left**2 / n_left) + (square_right - sum_right**2 / n_right)
    rss = np.where(valid, np.maximum(rss, 0.0), np.inf)
    best = int(np.argmin(rss))
    return int(features[best]), float(thresholds[best]), float(rss[best])


def best_split(  # noqa: PLR0913
    X: np.ndarray,
    y: np.ndarray,
    features: np.ndarray,
    split_mode: SplitMode,
    min_samples_leaf: int,
    rng: np.random.Generator,
) -> tuple[int, float, float] | None:
    """
    Pick the (feature, threshold) whose split leaves the lowest RSS.

    Returns (feature, threshold, rss) or None when no split respects ``min_samples_leaf``.
    Equal RSS keeps the lower feature index, then the lower threshold.
    """
    centered = y - y.mean()
    if split_mode == "random":
        return _random_split(X, centered, features, min_samples_leaf, rng)
    best: tuple[int, float, float] | None = None
    for j in features:
        found = _exhaustive_split(X[:, j], centered, min_samples_leaf)
        if found is not None and (best is None or found[0] < best[2]):
            best = (int(j), found[1], found[0])
    return best


@export
class TreeRegressor(Regressor):
    """
    Binary regression tree stored as flat node arrays.

    A row goes left at a node when ``x[feature] <= threshold``. Leaves have ``feature == -1`` and
    predict the mean training target that reached them.
    """

    kind = "tree"
    state_fields = ("feature", "threshold", "left", "right", "value", "n_node_samples", "rss")

    def __init__(  # noqa: PLR0913
        self,
        min_samples_leaf: int = 1,
        max_depth: int | None = None,
        ccp_alpha: float = 0.0,
        split_mode: SplitMode = "exhaustive",
        features_per_split: int | float | None = None,
        seed: int = 0,
    ) -> None:
        """Set growth and pruning parameters."""
        if min_samples_leaf < 1:
            msg = f"min_samples_leaf must be at least 1, got {min_samples_leaf}"
            raise UnsupportedHyperparameterError(msg)
        if ccp_alpha < 0:
            msg = f"ccp_alpha must be non-negative, got {ccp_alpha}"
            raise UnsupportedHyperparameterError(msg)
        if split_mode not in ("exhaustive", "random"):
            msg = f"split_mode must be 'exhaustive' or 'random', got {split_mode!r}"
            raise UnsupportedHyperparameterError(msg)
        super().__init__(
            min_samples_leaf=min_samples_leaf,
            max_depth=max_depth,
            ccp_alpha=ccp_alpha,
            split_mode=split_mode,
            features_per_split=features_per_split,
            seed=seed,
        )
        self.feature = np.empty(0, dtype=np.int64)
        self.threshold = np.empty(0)
        self.left = np.empty(0, dtype=np.int64)
        self.right = np.empty(0, dtype=np.int64)
        self.value = np.empty(0)
        self.n_node_samples = np.empty(0, dtype=np.int64)
        self.rss = np.empty(0)

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        self._grow(X, y, np.random.default_rng(self.hyperparams["seed"]))

    def grow(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> TreeRegressor:
        """Fit drawing from a caller-owned generator, so ensembles share one stream."""
        X, y = check_xy(X, y)
        self._grow(X, y, rng)
        self.n_features = X.shape[1]
        return self

    def _grow(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> None:
        min_leaf: int = self.hyperparams["min_samples_leaf"]
        max_depth: int | None = self.hyperparams["max_depth"]
        split_mode: SplitMode = self.hyperparams["split_mode"]
        n_features = X.shape[1]
        k = n_split_features(self.hyperparams["features_per_split"], n_features)

        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []
        n_samples: list[int] = []
        rss: list[float] = []

        def new_node() -> int:
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(0.0)
            n_samples.append(0)
            rss.append(0.0)
            return len(feature) - 1

        stack: list[tuple[int, np.ndarray, int]] = [(new_node(), np.arange(len(y)), 0)]
        while stack:
            node, rows, depth = stack.pop()
            targets = y[rows]
            value[node] = float(targets.mean())
            n_samples[node] = len(rows)
            rss[node] = float(((targets - value[node]) ** 2).sum())
            if len(rows) < 2 * min_leaf or (max_depth is not None and depth >= max_depth) or np.ptp(targets) == 0:
                continue
            features = np.arange(n_features) if k >= n_features else np.sort(rng.choice(n_features, k, replace=False))
            split = best_split(X[rows], targets, features, split_mode, min_leaf, rng)
            if split is None:
                continue
            feature[node], threshold[node] = split[0], split[1]
            goes_left = X[rows, split[0]] <= split[1]
            left[node], right[node] = new_node(), new_node()
            stack.append((right[node], rows[~goes_left], depth + 1))
            stack.append((left[node], rows[goes_left], depth + 1))

        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.value = np.array(value)
        self.n_node_samples = np.array(n_samples, dtype=np.int64)
        self.rss = np.array(rss)
        if self.hyperparams["ccp_alpha"] > 0:
            self._prune(self.hyperparams["ccp_alpha"])
        for name in self.state_fields:
            setattr(self, name, frozen(getattr(self, name)))

    def _prune(self, alpha: float) -> None:
        """Collapse subtrees so that RSS + alpha * leaves is minimal, then drop unreachable nodes."""
        cost = self.rss + alpha
        for node in range(len(self.feature) - 1, -1, -1):
            if self.feature[node] == LEAF:
                continue
            subtree = cost[self.left[node]] + cost[self.right[node]]
            if cost[node] <= subtree:
                self.feature[node] = LEAF
            else:
                cost[node] = subtree

        keep: list[int] = []
        stack = [0]
        while stack:
            node = stack.pop()
            keep.append(node)
            if self.feature[node] != LEAF:
                stack.extend((self.right[node], self.left[node]))
        keep_array = np.array(keep, dtype=np.int64)
        remap = np.full(len(self.feature), LEAF, dtype=np.int64)
        remap[keep_array] = np.arange(len(keep_array))
        is_leaf = self.feature[keep_array] == LEAF
        self.feature = self.feature[keep_array]
        self.threshold = np.where(is_leaf, 0.0, self.threshold[keep_array])
        self.left = np.where(is_leaf, LEAF, remap[self.left[keep_array]])
        self.right = np.where(is_leaf, LEAF, remap[self.right[keep_array]])
        self.value = self.value[keep_array]
        self.n_node_samples = self.n_node_samples[keep_array]
        self.rss = self.rss[keep_array]

    @property
    def n_leaves(self) -> int:
        """Number of leaves."""
        return int((self.feature == LEAF).sum())

    @property
    def depth(self) -> int:
        """Length of the longest root-to-leaf path."""
        depths = np.zeros(len(self.feature), dtype=np.int64)
        for node in range(len(self.feature)):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max()) if len(depths) else 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf id reached by each row."""
        X = np.asarray(X, dtype=float)
        nodes = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[nodes] != LEAF)
        while active.size:
            current = nodes[active]
            goes_left = X[active, self.feature[current]] <= self.threshold[current]
            nodes[active] = np.where(goes_left, self.left[current], self.right[current])
            active = active[self.feature[nodes[active]] != LEAF]
        return nodes

    def root_split_rss(self) -> float:
        """RSS after the root split (the root's own RSS if the tree is a single leaf)."""
        if self.feature[0] == LEAF:
            return float(self.rss[0])
        return float(self.rss[self.left[0]] + self.rss[self.right[0]])

    def training_rss(self) -> float:
        """Sum of leaf RSS over the fitted tree."""
        return float(self.rss[self.feature == LEAF].sum())

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


@export
def fit_tree(  # noqa: PLR0913
    X: np.ndarray,
    y: np.ndarray,
    min_samples_leaf: int = 1,
    max_depth: int | None = None,
    ccp_alpha: float = 0.0,
    split_mode: SplitMode = "exhaustive",
    features_per_split: int | float | None = None,
    seed: int = 0,
) -> TreeRegressor:
    """Grow (and optionally prune) a regression tree."""
    return TreeRegressor(  # type: ignore[return-value]
        min_samples_leaf=min_samples_leaf,
        max_depth=max_depth,
        ccp_alpha=ccp_alpha,
        split_mode=split_mode,
        features_per_split=features_per_split,
        seed=seed,
    ).fit(X, y)
