"""Bagged forests of regression trees; prediction is the mean over trees.

Every tree trains on its own row sample drawn from an independent substream:
tree i uses ``numpy.random.SeedSequence((seed, i))`` feeding PCG64, so the
samples (and therefore the whole forest) are bit-reproducible across
platforms and across sequential or threaded fitting.  Sampled row indices
are stored sorted and kept on the model for audit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, WidthMismatchError
from .tree import RegressionTree, TreeConfig, _fit_tree_impl, export_tree, import_tree
from .tree import predict_tree, predict_tree_batch

SAMPLE_MODES = ("bootstrap", "subsample")


@dataclass(frozen=True)
class ForestConfig:
    """Forest shape and sampling policy.

    ``bootstrap`` draws n rows with replacement (standard bagging);
    ``subsample`` draws ``round(subsample_fraction * n)`` distinct rows.
    ``max_features`` enables per-split feature subsampling when set.
    """

    n_trees: int = 100
    tree_config: TreeConfig = field(default_factory=TreeConfig)
    seed: int = 0
    sample_mode: str = "bootstrap"
    subsample_fraction: float = 1.0
    max_features: int | None = None

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.sample_mode not in SAMPLE_MODES:
            raise ConfigError(f"sample_mode must be one of {SAMPLE_MODES}")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ConfigError("subsample_fraction must be in (0, 1]")
        if self.max_features is not None and self.max_features < 1:
            raise ConfigError("max_features must be >= 1 or None")

    def to_json(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "tree_config": self.tree_config.to_json(),
            "seed": self.seed,
            "sample_mode": self.sample_mode,
            "subsample_fraction": self.subsample_fraction,
            "max_features": self.max_features,
        }

    @staticmethod
    def from_json(doc: dict) -> "ForestConfig":
        return ForestConfig(
            n_trees=doc["n_trees"],
            tree_config=TreeConfig.from_json(doc["tree_config"]),
            seed=doc["seed"],
            sample_mode=doc.get("sample_mode", "bootstrap"),
            subsample_fraction=doc.get("subsample_fraction", 1.0),
            max_features=doc.get("max_features"),
        )


@dataclass
class RandomForest:
    trees: list[RegressionTree]
    config: ForestConfig
    per_tree_row_indices: list[np.ndarray]

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    @property
    def feature_names(self) -> list[str]:
        return self.trees[0].feature_names

    @property
    def target_name(self) -> str:
        return self.trees[0].target_name


def _tree_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-tree stream: SeedSequence((seed, index)) -> PCG64."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed & (2**64 - 1), index)))
    )


def _draw_sample(rng: np.random.Generator, n: int, config: ForestConfig):
    if config.sample_mode == "bootstrap":
        idx = rng.integers(0, n, size=n)
    else:
        m = max(1, int(round(config.subsample_fraction * n)))
        idx = rng.permutation(n)[:m]
    idx = np.sort(idx)
    # One draw for the per-split feature sampler, consumed whether or not
    # subsampling is on, so row samples do not depend on that setting.
    feature_seed = int(rng.integers(0, 2**63, dtype=np.int64))
    return idx, feature_seed


def fit_forest(
    X,
    y,
    config: ForestConfig,
    feature_names: list[str] | None = None,
    target_name: str = "y",
    n_jobs: int = 1,
) -> RandomForest:
    """Fit ``n_trees`` trees, each on its own sampled rows.

    Samples are pre-derived per tree index before any fitting starts, so
    threaded (n_jobs > 1) and sequential runs build identical forests.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = X.shape[0]
    if n < 1:
        raise ConfigError("cannot fit a forest on an empty dataset")

    draws = []
    for i in range(config.n_trees):
        rng = _tree_rng(config.seed, i)
        draws.append(_draw_sample(rng, n, config))

    max_features = 0
    if config.max_features is not None:
        max_features = min(config.max_features, X.shape[1])

    def build(i):
        idx, feature_seed = draws[i]
        return _fit_tree_impl(
            X[idx],
            y[idx],
            config.tree_config,
            feature_names,
            target_name,
            max_features=max_features,
            feature_seed=feature_seed,
        )

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(build, range(config.n_trees)))
    else:
        trees = [build(i) for i in range(config.n_trees)]

    return RandomForest(
        trees=trees,
        config=config,
        per_tree_row_indices=[idx for idx, _ in draws],
    )


def predict_forest(forest: RandomForest, x) -> float:
    """Arithmetic mean of the per-tree predictions for one feature row.

    The sum is exactly rounded (fsum), so reordering the trees cannot move
    the result by even an ulp.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != forest.n_features:
        raise WidthMismatchError(
            f"expected a row of width {forest.n_features}, got shape {x.shape}"
        )
    return math.fsum(predict_tree(t, x) for t in forest.trees) / len(forest.trees)


def predict_forest_batch(forest: RandomForest, X) -> np.ndarray:
    """Mean of per-tree batch predictions over the rows of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    per_tree = np.empty((len(forest.trees), X.shape[0]), dtype=np.float64)
    for i, t in enumerate(forest.trees):
        per_tree[i] = predict_tree_batch(t, X)
    k = len(forest.trees)
    return np.asarray([math.fsum(per_tree[:, j]) / k for j in range(X.shape[0])])


def export_forest(forest: RandomForest) -> dict:
    return {
        "model": "forest",
        "config": forest.config.to_json(),
        "trees": [export_tree(t) for t in forest.trees],
        "per_tree_row_indices": [
            [int(i) for i in idx] for idx in forest.per_tree_row_indices
        ],
    }


def import_forest(doc: dict) -> RandomForest:
    return RandomForest(
        trees=[import_tree(td) for td in doc["trees"]],
        config=ForestConfig.from_json(doc["config"]),
        per_tree_row_indices=[
            np.asarray(idx, dtype=np.int64) for idx in doc["per_tree_row_indices"]
        ],
    )
