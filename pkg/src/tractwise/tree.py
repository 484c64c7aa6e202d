"""Greedy regression trees: variance-sum split search, mean-valued leaves.

A split sends a row left when its value on the split feature is strictly
below the threshold and right otherwise (equality goes right).  The split
loss is the plain, size-unweighted sum of the two child variances; an
optional size-weighted mode exists for comparison studies but is off by
default.  Candidate thresholds are the midpoints between consecutive
distinct sorted values of each column, and ties resolve to the smallest
feature index, then the smallest threshold, so fits are fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernel
from .errors import ConfigError, WidthMismatchError
from .linreg import r2_score


def node_variance(y) -> float:
    """Mean squared deviation from the mean (population 1/n normalization).

    A set of identical values has exactly zero variance, even when its
    floating mean would not be exactly representable.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.size == 0:
        raise ConfigError("node_variance of an empty set is undefined")
    if np.all(y == y[0]):
        return 0.0
    d = y - y.mean()
    return float(d @ d) / y.size


def split_loss(y_left, y_right) -> float:
    """Sum of the two child variances, unweighted by child sizes."""
    return node_variance(y_left) + node_variance(y_right)


def weighted_split_loss(y_left, y_right) -> float:
    """Size-weighted mean of child variances (the conventional alternative)."""
    yl = np.asarray(y_left, dtype=np.float64)
    yr = np.asarray(y_right, dtype=np.float64)
    n = yl.size + yr.size
    return (yl.size * node_variance(yl) + yr.size * node_variance(yr)) / n


@dataclass(frozen=True)
class SplitRule:
    feature_index: int
    threshold: float


@dataclass(frozen=True)
class TreeConfig:
    """Growth limits.  ``max_depth=None`` means unlimited (stop at purity)."""

    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    weighted_loss: bool = False

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0 or None")
        if self.min_samples_split < 2:
            raise ConfigError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")

    def to_json(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "min_samples_leaf": self.min_samples_leaf,
            "weighted_loss": self.weighted_loss,
        }

    @staticmethod
    def from_json(doc: dict) -> "TreeConfig":
        return TreeConfig(
            max_depth=doc.get("max_depth"),
            min_samples_split=doc.get("min_samples_split", 2),
            min_samples_leaf=doc.get("min_samples_leaf", 1),
            weighted_loss=doc.get("weighted_loss", False),
        )


@dataclass
class TreeNode:
    """One node: internal nodes carry a rule and children, leaves a prediction."""

    n: int
    variance: float
    rule: SplitRule | None = None
    left: TreeNode | None = None
    right: TreeNode | None = None
    prediction: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.rule is None


class RegressionTree:
    """A fitted tree.  Nodes live in flat arrays; ``root`` materializes the
    linked TreeNode view on demand."""

    def __init__(self, arrays, config, feature_names, target_name, train_r2):
        feat, thr, left, right, count, var, mean = arrays
        self._feat = feat
        self._thr = thr
        self._left = left
        self._right = right
        self._count = count
        self._var = var
        self._mean = mean
        self.config = config
        self.feature_names = list(feature_names)
        self.target_name = target_name
        self.train_r2 = train_r2
        self._root = None

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_nodes(self) -> int:
        return int(self._feat.shape[0])

    @property
    def n_leaves(self) -> int:
        return int((self._feat < 0).sum())

    @property
    def root(self) -> TreeNode:
        if self._root is None:
            # Children always have larger ids than their parent, so a reverse
            # sweep links the whole tree without recursion.
            nodes: list[TreeNode | None] = [None] * self.n_nodes
            for nid in range(self.n_nodes - 1, -1, -1):
                if self._feat[nid] < 0:
                    nodes[nid] = TreeNode(
                        n=int(self._count[nid]),
                        variance=float(self._var[nid]),
                        prediction=float(self._mean[nid]),
                    )
                else:
                    nodes[nid] = TreeNode(
                        n=int(self._count[nid]),
                        variance=float(self._var[nid]),
                        rule=SplitRule(int(self._feat[nid]), float(self._thr[nid])),
                        left=nodes[int(self._left[nid])],
                        right=nodes[int(self._right[nid])],
                    )
            self._root = nodes[0]
        return self._root

    def depth(self) -> int:
        """Longest root-to-leaf path, in edges."""
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        out = 0
        for nid in range(self.n_nodes):
            if self._feat[nid] >= 0:
                depths[self._left[nid]] = depths[nid] + 1
                depths[self._right[nid]] = depths[nid] + 1
            elif depths[nid] > out:
                out = int(depths[nid])
        return out


def _validate_matrix(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ConfigError("X must be a 2-D matrix with at least one column")
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ConfigError("y must be a vector aligned with the rows of X")
    if X.shape[0] < 1:
        raise ConfigError("cannot fit on an empty dataset")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ConfigError("X and y must be finite everywhere")
    return X, y


def best_split(X, y, config: TreeConfig | None = None) -> SplitRule | None:
    """The loss-minimizing (feature, threshold) over all candidates, or None.

    None is a value, not an error: it means the targets have no variance or
    no threshold yields two children of at least ``min_samples_leaf`` rows.
    """
    config = config or TreeConfig()
    X, y = _validate_matrix(X, y)
    if X.shape[0] < config.min_samples_split:
        return None
    j, t, _ = _kernel._best_split_root(
        X, y, config.min_samples_leaf, config.weighted_loss
    )
    if j < 0:
        return None
    return SplitRule(int(j), float(t))


def fit_tree(
    X,
    y,
    config: TreeConfig | None = None,
    feature_names: list[str] | None = None,
    target_name: str = "y",
) -> RegressionTree:
    """Grow a tree by recursive greedy splitting; leaves predict their mean."""
    config = config or TreeConfig()
    return _fit_tree_impl(X, y, config, feature_names, target_name)


def _fit_tree_impl(
    X,
    y,
    config,
    feature_names=None,
    target_name="y",
    max_features=0,
    feature_seed=0,
):
    """Shared fit path; forests reach it directly to pass feature subsampling."""
    X, y = _validate_matrix(X, y)
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(X.shape[1])]
    elif len(feature_names) != X.shape[1]:
        raise ConfigError("feature_names must match the X column count")
    depth_cap = _kernel.NO_DEPTH_LIMIT if config.max_depth is None else config.max_depth
    arrays = _kernel._grow(
        X,
        y,
        depth_cap,
        config.min_samples_split,
        config.min_samples_leaf,
        config.weighted_loss,
        max_features,
        np.uint64(feature_seed),
    )
    tree = RegressionTree(arrays, config, feature_names, target_name, train_r2=0.0)
    if np.all(y == y[0]):
        # Constant target: the single leaf reproduces it exactly.
        tree.train_r2 = 1.0
    else:
        tree.train_r2 = r2_score(y, predict_tree_batch(tree, X))
    return tree


def predict_tree(tree: RegressionTree, x) -> float:
    """Prediction for one feature row; a value equal to a threshold goes right."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != tree.n_features:
        raise WidthMismatchError(
            f"expected a row of width {tree.n_features}, got shape {x.shape}"
        )
    nid = 0
    while tree._feat[nid] >= 0:
        if x[tree._feat[nid]] < tree._thr[nid]:
            nid = int(tree._left[nid])
        else:
            nid = int(tree._right[nid])
    return float(tree._mean[nid])


def predict_tree_batch(tree: RegressionTree, X) -> np.ndarray:
    """Vectorized prediction over the rows of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise WidthMismatchError(
            f"expected a matrix of width {tree.n_features}, got shape {X.shape}"
        )
    out = np.empty(X.shape[0], dtype=np.float64)
    _kernel._predict_rows(
        tree._feat, tree._thr, tree._left, tree._right, tree._mean, X, out
    )
    return out


def export_tree(tree: RegressionTree) -> dict:
    """Lossless nested document for the fitted tree; see import_tree."""
    n = tree.n_nodes
    docs: list[dict | None] = [None] * n
    for nid in range(n - 1, -1, -1):
        internal = tree._feat[nid] >= 0
        docs[nid] = {
            "rule": (
                {"j": int(tree._feat[nid]), "t": float(tree._thr[nid])}
                if internal
                else None
            ),
            "n": int(tree._count[nid]),
            "variance": float(tree._var[nid]),
            "prediction": None if internal else float(tree._mean[nid]),
            "left": docs[int(tree._left[nid])] if internal else None,
            "right": docs[int(tree._right[nid])] if internal else None,
        }
    return {
        "model": "tree",
        "config": tree.config.to_json(),
        "feature_names": tree.feature_names,
        "target_name": tree.target_name,
        "train_r2": float(tree.train_r2),
        "root": docs[0],
    }


def import_tree(doc: dict) -> RegressionTree:
    """Rebuild a RegressionTree from an export_tree document."""
    feat, thr, left, right, count, var, mean = [], [], [], [], [], [], []

    def new_node(nd):
        nid = len(feat)
        internal = nd["rule"] is not None
        feat.append(nd["rule"]["j"] if internal else -1)
        thr.append(nd["rule"]["t"] if internal else 0.0)
        left.append(-1)
        right.append(-1)
        count.append(nd["n"])
        var.append(nd["variance"])
        mean.append(0.0 if internal else nd["prediction"])
        return nid

    stack = [(doc["root"], -1, "")]
    while stack:
        nd, parent, side = stack.pop()
        nid = new_node(nd)
        if parent >= 0:
            (left if side == "l" else right)[parent] = nid
        if nd["rule"] is not None:
            stack.append((nd["right"], nid, "r"))
            stack.append((nd["left"], nid, "l"))

    # Internal node means are not serialized (prediction is null there); they
    # are only read at leaves, so zeros are fine.
    arrays = (
        np.asarray(feat, dtype=np.int64),
        np.asarray(thr, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(count, dtype=np.int64),
        np.asarray(var, dtype=np.float64),
        np.asarray(mean, dtype=np.float64),
    )
    return RegressionTree(
        arrays,
        TreeConfig.from_json(doc["config"]),
        doc["feature_names"],
        doc["target_name"],
        doc["train_r2"],
    )
