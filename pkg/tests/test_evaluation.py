import json
import math

import numpy as np
import pytest

from conftest import piecewise_noise_data
from tractwise.errors import ConfigError
from tractwise.evaluation import (
    FoldPlan,
    ModelSpec,
    cross_validate,
    depth_sweep,
    find_overfit_depth,
    kfold_plan,
    train_test_split,
)
from tractwise.tree import TreeConfig


class TestKFoldPlan:
    def test_even_folds(self):
        plan = kfold_plan(10, 5, seed=1)
        assert plan.fold_sizes() == [2, 2, 2, 2, 2]
        assert sorted(np.concatenate([np.where(plan.assignments == f)[0] for f in range(5)]).tolist()) == list(range(10))

    def test_uneven_folds_differ_by_at_most_one(self):
        plan = kfold_plan(11, 5, seed=1)
        sizes = sorted(plan.fold_sizes(), reverse=True)
        assert sizes == [3, 2, 2, 2, 2]

    def test_same_seed_same_assignments(self):
        a = kfold_plan(50, 5, seed=7)
        b = kfold_plan(50, 5, seed=7)
        assert np.array_equal(a.assignments, b.assignments)
        assert a.same_plan(b)

    def test_different_seed_differs(self):
        a = kfold_plan(50, 5, seed=7)
        b = kfold_plan(50, 5, seed=8)
        assert not np.array_equal(a.assignments, b.assignments)
        assert not a.same_plan(b)

    def test_k_bounds(self):
        with pytest.raises(ConfigError):
            kfold_plan(5, 1, seed=0)
        with pytest.raises(ConfigError):
            kfold_plan(5, 6, seed=0)


def linear_data(n=40, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 10, (n, 2))
    return X, 3.0 * X[:, 0] + 2.0


class TestCrossValidate:
    def test_exact_linear_scores_one_everywhere(self):
        X, y = linear_data()
        plan = kfold_plan(len(y), 5, seed=3)
        report = cross_validate(X, y, ModelSpec(kind="poly", degree=1, feature_index=0), plan)
        assert report.flagged_folds == []
        for s in report.per_fold_r2:
            assert s == pytest.approx(1.0, abs=1e-9)
        assert report.mean_r2 == pytest.approx(1.0, abs=1e-9)

    def test_pure_noise_targets_score_at_chance(self):
        rng = np.random.default_rng(1002)
        X = rng.random((103, 3))
        y = rng.normal(size=103)
        plan = kfold_plan(103, 5, seed=11)
        for spec in (
            ModelSpec(kind="poly", degree=1, feature_index=0),
            ModelSpec(kind="tree", tree_config=TreeConfig(max_depth=3)),
        ):
            report = cross_validate(X, y, spec, plan)
            assert report.mean_r2 <= 0.05

    def test_singleton_folds_flagged_not_crashed(self):
        X = np.array([[1.0], [2.0]])
        y = np.array([5.0, 6.0])
        plan = kfold_plan(2, 2, seed=0)
        report = cross_validate(X, y, ModelSpec(kind="tree"), plan)
        assert report.per_fold_r2 == [None, None]
        assert report.flagged_folds == [0, 1]
        assert math.isnan(report.mean_r2)
        assert report.to_json()["mean_r2"] is None

    def test_partially_flagged_folds(self):
        # Fold assignments are seeded; build targets constant on one fold only.
        plan = kfold_plan(20, 4, seed=5)
        rng = np.random.default_rng(6)
        X = rng.random((20, 2))
        y = rng.normal(size=20)
        y[plan.assignments == 2] = 42.0
        report = cross_validate(X, y, ModelSpec(kind="tree", tree_config=TreeConfig(max_depth=2)), plan)
        assert report.flagged_folds == [2]
        assert report.per_fold_r2[2] is None
        assert sum(s is not None for s in report.per_fold_r2) == 3

    def test_summaries_match_fold_scores_exactly(self):
        X, y = piecewise_noise_data(80, seed=9)
        plan = kfold_plan(80, 5, seed=2)
        report = cross_validate(X, y, ModelSpec(kind="tree", tree_config=TreeConfig(max_depth=3)), plan)
        valid = np.asarray([s for s in report.per_fold_r2 if s is not None])
        assert report.mean_r2 == float(valid.mean())
        assert report.std_r2 == float(valid.std())

    def test_reproducible_bit_for_bit(self):
        X, y = piecewise_noise_data(60, seed=10)
        plan = kfold_plan(60, 5, seed=4)
        spec = ModelSpec(kind="tree", tree_config=TreeConfig(max_depth=4))
        a = cross_validate(X, y, spec, plan)
        b = cross_validate(X, y, spec, plan)
        assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)

    def test_plan_size_mismatch(self):
        X, y = linear_data(30)
        with pytest.raises(ConfigError):
            cross_validate(X, y, ModelSpec(kind="tree"), kfold_plan(29, 5, seed=0))

    def test_folds_partition_rows(self):
        plan = kfold_plan(37, 5, seed=13)
        seen = np.zeros(37, dtype=int)
        for f in range(plan.k):
            seen[plan.assignments == f] += 1
        assert (seen == 1).all()


class TestFindOverfitDepth:
    def test_sustained_decline_found(self):
        assert find_overfit_depth([1, 2, 3], [0.5, 0.4, 0.39], tau=0.005) == 1

    def test_recovery_pushes_detection_later(self):
        assert find_overfit_depth([1, 2, 3], [0.5, 0.6, 0.55], tau=0.005) == 2

    def test_last_depth_never_qualifies(self):
        assert find_overfit_depth([1, 2], [0.5, 0.6], tau=0.005) is None

    def test_flat_curve_gives_none(self):
        assert find_overfit_depth([1, 2, 3], [0.5, 0.5, 0.5], tau=0.005) is None

    def test_shallow_dip_below_tau_ignored(self):
        assert find_overfit_depth([1, 2, 3], [0.5, 0.499, 0.498], tau=0.005) is None


class TestDepthSweep:
    def test_constant_target_flat_curves(self):
        rng = np.random.default_rng(3)
        X = rng.random((50, 2))
        y = np.full(50, 4.2)
        report = depth_sweep(X[:30], y[:30], X[30:], y[30:], depths=[1, 2, 3], seed=0)
        assert report.train_r2 == [1.0, 1.0, 1.0]
        assert report.test_r2 == [1.0, 1.0, 1.0]
        assert report.overfit_depth is None

    def test_train_curve_nondecreasing_for_trees(self):
        X, y = piecewise_noise_data(400, seed=21)
        report = depth_sweep(X[:280], y[:280], X[280:], y[280:], depths=list(range(1, 11)), seed=0)
        for lo, hi in zip(report.train_r2, report.train_r2[1:]):
            assert hi >= lo - 1e-12

    def test_forest_decline_no_worse_than_tree(self):
        X, y = piecewise_noise_data(500, seed=33)
        Xtr, ytr, Xte, yte = X[:350], y[:350], X[350:], y[350:]
        depths = [1, 2, 3, 5, 8, 12]
        tree = depth_sweep(Xtr, ytr, Xte, yte, depths=depths, model_kind="tree", seed=1)
        forest = depth_sweep(Xtr, ytr, Xte, yte, depths=depths, model_kind="forest",
                             seed=1, n_trees=40)
        tree_gap = max(tree.test_r2) - tree.test_r2[-1]
        forest_gap = max(forest.test_r2) - forest.test_r2[-1]
        assert forest_gap <= tree_gap

    def test_rejects_poly(self):
        X, y = linear_data()
        with pytest.raises(ConfigError):
            depth_sweep(X, y, X, y, depths=[1], model_kind="poly")

    def test_json_round_trip_fields(self):
        X, y = piecewise_noise_data(120, seed=2)
        report = depth_sweep(X[:80], y[:80], X[80:], y[80:], depths=[1, 2], seed=9)
        doc = report.to_json()
        assert doc["depths"] == [1, 2]
        assert len(doc["train_r2"]) == 2 and len(doc["test_r2"]) == 2
        assert doc["model_kind"] == "tree" and doc["seed"] == 9


class TestTrainTestSplit:
    def test_disjoint_cover(self):
        tr, te = train_test_split(100, 0.3, seed=5)
        assert len(tr) + len(te) == 100
        assert len(np.intersect1d(tr, te)) == 0
        assert len(te) == 30

    def test_deterministic(self):
        assert np.array_equal(train_test_split(50, 0.25, seed=3)[0],
                              train_test_split(50, 0.25, seed=3)[0])

    def test_bounds(self):
        with pytest.raises(ConfigError):
            train_test_split(10, 0.0, seed=0)
        with pytest.raises(ConfigError):
            train_test_split(10, 1.0, seed=0)


class TestModelSpec:
    def test_kind_validated(self):
        with pytest.raises(ConfigError):
            ModelSpec(kind="svm")

    def test_forest_config_defaulted(self):
        spec = ModelSpec(kind="forest")
        assert spec.forest_config is not None
        assert spec.to_json()["forest_config"]["n_trees"] == 100
