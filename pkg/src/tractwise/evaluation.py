"""Model evaluation: seeded k-fold cross-validation and depth sweeps.

Fold assignment is a seeded shuffle followed by round-robin dealing, so fold
sizes differ by at most one and the plan is a pure function of (n, k, seed).
Cross-validation flags folds whose held-out targets have no variance instead
of scoring them; depth sweeps record train/test R² per depth and locate the
depth beyond which the test score stays materially below its peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .forest import ForestConfig, fit_forest, predict_forest_batch
from .linreg import fit_poly, predict, r2_score
from .tree import TreeConfig, fit_tree, predict_tree_batch

DEFAULT_K = 5
DEFAULT_OVERFIT_TOLERANCE = 0.005

MODEL_KINDS = ("poly", "tree", "forest")


@dataclass(frozen=True)
class ModelSpec:
    """What to fit inside an evaluation loop.

    ``poly`` models use a single column of X (``feature_index``); trees and
    forests take the whole matrix.
    """

    kind: str
    degree: int = 1
    feature_index: int = 0
    tree_config: TreeConfig = field(default_factory=TreeConfig)
    forest_config: ForestConfig | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"model kind must be one of {MODEL_KINDS}")
        if self.kind == "forest" and self.forest_config is None:
            object.__setattr__(self, "forest_config", ForestConfig())

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.kind == "poly":
            doc["degree"] = self.degree
            doc["feature_index"] = self.feature_index
        elif self.kind == "tree":
            doc["tree_config"] = self.tree_config.to_json()
        else:
            doc["forest_config"] = self.forest_config.to_json()
        return doc


def _fit_predictor(spec: ModelSpec, X, y, n_jobs: int = 1):
    """Fit per the spec; returns a batch predict callable over feature rows."""
    if spec.kind == "poly":
        model = fit_poly(X[:, spec.feature_index], y, spec.degree)
        return lambda Xt: predict(model, Xt[:, spec.feature_index])
    if spec.kind == "tree":
        model = fit_tree(X, y, spec.tree_config)
        return lambda Xt: predict_tree_batch(model, Xt)
    model = fit_forest(X, y, spec.forest_config, n_jobs=n_jobs)
    return lambda Xt: predict_forest_batch(model, Xt)


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray  # per-row fold index in [0, k)
    seed: int

    @property
    def n(self) -> int:
        return int(self.assignments.shape[0])

    def fold_sizes(self) -> list[int]:
        return [int((self.assignments == f).sum()) for f in range(self.k)]

    def to_json(self) -> dict:
        return {"k": self.k, "seed": self.seed, "n": self.n}

    def same_plan(self, other: "FoldPlan") -> bool:
        return (
            self.k == other.k
            and self.seed == other.seed
            and self.n == other.n
            and bool(np.array_equal(self.assignments, other.assignments))
        )


def kfold_plan(n: int, k: int, seed: int) -> FoldPlan:
    """Deterministic fold assignment: seeded shuffle, then round-robin."""
    if not 2 <= k <= n:
        raise ConfigError(f"k must satisfy 2 <= k <= n, got k={k}, n={n}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed & (2**64 - 1),))))
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    for pos, row in enumerate(perm):
        assignments[row] = pos % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


@dataclass
class CvReport:
    """Per-fold held-out R² with summary; flagged folds carry None scores."""

    per_fold_r2: list[float | None]
    mean_r2: float
    std_r2: float
    flagged_folds: list[int]
    plan: FoldPlan

    def to_json(self) -> dict:
        return {
            "per_fold_r2": [None if s is None else float(s) for s in self.per_fold_r2],
            "mean_r2": None if math.isnan(self.mean_r2) else float(self.mean_r2),
            "std_r2": None if math.isnan(self.std_r2) else float(self.std_r2),
            "flagged_folds": self.flagged_folds,
            "plan": self.plan.to_json(),
        }


def summarize_scores(scores: list[float]) -> tuple[float, float]:
    """Unweighted mean and population std of fold scores."""
    a = np.asarray(scores, dtype=np.float64)
    return float(a.mean()), float(a.std())


def cross_validate(X, y, model_spec: ModelSpec, plan: FoldPlan, n_jobs: int = 1) -> CvReport:
    """Fit on k-1 folds, score R² on the held-out fold, for every fold.

    A fold whose test targets have zero variance cannot be R²-scored; it is
    flagged (score None) rather than fitted and silently scored.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if plan.n != X.shape[0]:
        raise ConfigError(
            f"fold plan covers {plan.n} rows but the data has {X.shape[0]}"
        )
    per_fold: list[float | None] = []
    flagged: list[int] = []
    for f in range(plan.k):
        test = plan.assignments == f
        y_test = y[test]
        if np.all(y_test == y_test[0]):
            per_fold.append(None)
            flagged.append(f)
            continue
        predictor = _fit_predictor(model_spec, X[~test], y[~test], n_jobs=n_jobs)
        per_fold.append(r2_score(y_test, predictor(X[test])))
    valid = [s for s in per_fold if s is not None]
    if valid:
        mean, std = summarize_scores(valid)
    else:
        # Every fold was degenerate; the report carries the flags, but there
        # is no score distribution to summarize.
        mean = std = float("nan")
    return CvReport(
        per_fold_r2=per_fold,
        mean_r2=mean,
        std_r2=std,
        flagged_folds=flagged,
        plan=plan,
    )


@dataclass
class DepthSweepReport:
    depths: list[int]
    train_r2: list[float]
    test_r2: list[float]
    overfit_depth: int | None
    model_kind: str
    seed: int
    tau: float

    def to_json(self) -> dict:
        return {
            "depths": self.depths,
            "train_r2": [float(s) for s in self.train_r2],
            "test_r2": [float(s) for s in self.test_r2],
            "overfit_depth": self.overfit_depth,
            "model_kind": self.model_kind,
            "seed": self.seed,
            "tau": self.tau,
        }


def _sweep_r2(y, yhat) -> float:
    """R² with a documented degenerate convention: when the observed values
    are constant, reproducing them (within rounding) scores 1.0 and anything
    else 0.0."""
    resid = y - yhat
    ss_res = float(resid @ resid)
    if np.all(y == y[0]):
        tol = y.size * (1e-12 * (1.0 + float(np.abs(y).max()))) ** 2
        return 1.0 if ss_res <= tol else 0.0
    d = y - y.mean()
    return 1.0 - ss_res / float(d @ d)


def find_overfit_depth(depths, test_scores, tau=DEFAULT_OVERFIT_TOLERANCE):
    """Smallest listed depth whose every later depth tests at least tau worse.

    The final depth has no later evidence and never qualifies; None means no
    sustained decline was observed.
    """
    for i in range(len(depths) - 1):
        ceiling = test_scores[i] - tau
        if all(s <= ceiling for s in test_scores[i + 1 :]):
            return depths[i]
    return None


def depth_sweep(
    X_train,
    y_train,
    X_test,
    y_test,
    depths: list[int],
    model_kind: str = "tree",
    seed: int = 0,
    tau: float = DEFAULT_OVERFIT_TOLERANCE,
    n_trees: int = 100,
    tree_config: TreeConfig | None = None,
    n_jobs: int = 1,
) -> DepthSweepReport:
    """Fit one model per listed depth; record train/test R² curves."""
    if model_kind not in ("tree", "forest"):
        raise ConfigError("depth_sweep supports model_kind 'tree' or 'forest'")
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.float64)
    X_test = np.asarray(X_test, dtype=np.float64)
    y_test = np.asarray(y_test, dtype=np.float64)
    if X_train.shape[0] == 0 or X_test.shape[0] == 0:
        raise ConfigError("depth_sweep needs nonempty train and test splits")
    base = tree_config or TreeConfig()
    train_scores: list[float] = []
    test_scores: list[float] = []
    for d in depths:
        cfg = replace(base, max_depth=d)
        if model_kind == "tree":
            model = fit_tree(X_train, y_train, cfg)
            tr = predict_tree_batch(model, X_train)
            te = predict_tree_batch(model, X_test)
        else:
            fconfig = ForestConfig(n_trees=n_trees, tree_config=cfg, seed=seed)
            model = fit_forest(X_train, y_train, fconfig, n_jobs=n_jobs)
            tr = predict_forest_batch(model, X_train)
            te = predict_forest_batch(model, X_test)
        train_scores.append(_sweep_r2(y_train, tr))
        test_scores.append(_sweep_r2(y_test, te))
    return DepthSweepReport(
        depths=list(depths),
        train_r2=train_scores,
        test_r2=test_scores,
        overfit_depth=find_overfit_depth(depths, test_scores, tau),
        model_kind=model_kind,
        seed=seed,
        tau=tau,
    )


def train_test_split(n: int, test_fraction: float, seed: int):
    """Deterministic row split; returns (train_indices, test_indices)."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("test_fraction must be in (0, 1)")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed & (2**64 - 1), 1))))
    perm = rng.permutation(n)
    n_test = max(1, int(round(test_fraction * n)))
    if n_test >= n:
        raise ConfigError("test_fraction leaves no training rows")
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])
