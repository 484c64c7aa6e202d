"""The ``tractwise`` command: clean, explore, fit, and evaluate from a config.

Every command reads a JSON config (paths resolved relative to the config
file), applies any flag overrides, and writes deterministic artifacts into
the output directory.  Each artifact embeds the run seed and a digest of the
effective config; running a command twice with the same inputs produces
byte-identical files.  Failures exit nonzero with an error JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import svg
from .dataset import (
    DEFAULT_NULL_TOKENS,
    CleanDataset,
    ColumnSpec,
    join_and_clean,
    load_table,
    normalize_nulls,
)
from .errors import ConfigError, TractwiseError
from .evaluation import (
    DEFAULT_K,
    DEFAULT_OVERFIT_TOLERANCE,
    CvReport,
    ModelSpec,
    cross_validate,
    depth_sweep,
    kfold_plan,
    train_test_split,
)
from .forest import ForestConfig, export_forest, fit_forest
from .ioutil import atomic_write_text, canonical_json, config_digest
from .linreg import fit_poly, predict, residual_report, residual_spread_ratio
from .stats import categorical_group_summary, corr_matrix, threshold_groups, top_k_correlated
from .tree import TreeConfig, export_tree, fit_tree

SCHEMA_VERSION = 1


def _load_config(path: str) -> tuple[dict, Path]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}", path=str(path))
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}", path=str(path)) from None
    if cfg.get("schema") != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported config schema {cfg.get('schema')!r}, expected {SCHEMA_VERSION}",
            path=str(path),
        )
    return cfg, p.parent


def _column_spec(doc: dict, table: str) -> ColumnSpec:
    try:
        return ColumnSpec(
            source_name=doc["source"],
            standard_name=doc.get("standard", ""),
            role=doc.get("role", "feature"),
            kind=doc.get("kind", "count"),
            group=doc.get("group"),
        )
    except KeyError as e:
        raise ConfigError(f"column entry missing key {e}", table=table) from None


def _build_dataset(cfg: dict, base: Path):
    tables_cfg = cfg.get("tables")
    if not tables_cfg:
        raise ConfigError("config declares no tables")
    null_tokens = frozenset(cfg.get("null_tokens", DEFAULT_NULL_TOKENS))
    tables = []
    for t in tables_cfg:
        specs = [_column_spec(c, t.get("name", "?")) for c in t.get("columns", [])]
        path = base / t["path"]
        table = load_table(path, specs, name=t.get("name", t["path"]))
        tables.append(normalize_nulls(table, null_tokens))
    return join_and_clean(tables)


def _resolve_features(data: CleanDataset, model_cfg: dict, target: str) -> list[str]:
    feature_set = model_cfg.get("feature_set", "custom")
    if feature_set == "socioeconomic":
        names = data.columns_in_group("socioeconomic")
        if not names:
            raise ConfigError("no columns tagged group='socioeconomic'")
    elif feature_set == "health_indicators":
        candidates = data.columns_in_group("health_indicator")
        if not candidates:
            raise ConfigError("no columns tagged group='health_indicator'")
        names = top_k_correlated(data, candidates, target, model_cfg.get("top_k", 4))
    elif feature_set == "custom":
        names = model_cfg.get("custom_features") or list(data.feature_names)
    else:
        raise ConfigError(f"unknown feature_set {feature_set!r}")
    if target in names:
        raise ConfigError(f"target {target!r} cannot be one of its own features")
    return names


def _tree_config(model_cfg: dict) -> TreeConfig:
    return TreeConfig(
        max_depth=model_cfg.get("max_depth"),
        min_samples_split=model_cfg.get("min_samples_split", 2),
        min_samples_leaf=model_cfg.get("min_samples_leaf", 1),
        weighted_loss=model_cfg.get("weighted_loss", False),
    )


def _forest_config(model_cfg: dict, seed: int) -> ForestConfig:
    return ForestConfig(
        n_trees=model_cfg.get("n_trees", 100),
        tree_config=_tree_config(model_cfg),
        seed=seed,
        sample_mode=model_cfg.get("sample_mode", "bootstrap"),
        subsample_fraction=model_cfg.get("subsample_fraction", 1.0),
        max_features=model_cfg.get("max_features"),
    )


def _model_spec(model_cfg: dict, data: CleanDataset, features: list[str], seed: int) -> ModelSpec:
    kind = model_cfg.get("kind", "tree")
    if kind == "poly":
        feature = model_cfg.get("feature")
        if not feature:
            raise ConfigError("poly models need model.feature")
        return ModelSpec(
            kind="poly",
            degree=model_cfg.get("degree", 1),
            feature_index=features.index(feature),
        )
    if kind == "tree":
        return ModelSpec(kind="tree", tree_config=_tree_config(model_cfg))
    if kind == "forest":
        return ModelSpec(kind="forest", forest_config=_forest_config(model_cfg, seed))
    raise ConfigError(f"unknown model kind {kind!r}")


class _Run:
    """Shared context for one CLI invocation."""

    def __init__(self, args):
        self.cfg, self.base = _load_config(args.config)
        for key in ("model", "analysis", "cv", "sweep", "report"):
            self.cfg.setdefault(key, {})
        self._apply_overrides(args)
        self.seed = int(self.cfg.get("seed", 0))
        self.out = Path(args.out or self.cfg.get("out_dir", "out"))
        self.digest = config_digest(self.cfg)
        self.n_jobs = int(getattr(args, "n_jobs", 1) or 1)

    def _apply_overrides(self, args):
        cfg = self.cfg
        if getattr(args, "seed", None) is not None:
            cfg["seed"] = args.seed
        model = cfg["model"]
        for flag, key in (
            ("model", "kind"),
            ("degree", "degree"),
            ("feature", "feature"),
            ("target", "target"),
            ("max_depth", "max_depth"),
            ("n_trees", "n_trees"),
        ):
            v = getattr(args, flag, None)
            if v is not None:
                model[key] = v
        if getattr(args, "k", None) is not None:
            cfg["cv"]["k"] = args.k
        if getattr(args, "depths", None) is not None:
            cfg["sweep"]["depths"] = _parse_depths(args.depths)

    def stamp(self, command: str) -> dict:
        return {"command": command, "seed": self.seed, "config_digest": self.digest}

    def write_json(self, name: str, payload: dict, command: str) -> Path:
        doc = dict(self.stamp(command))
        doc.update(payload)
        path = self.out / name
        atomic_write_text(path, canonical_json(doc))
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.out / name
        atomic_write_text(path, text)
        return path

    def csv_stamp(self, command: str) -> str:
        return f"# tractwise {command} seed={self.seed} config={self.digest}\n"

    def dataset(self):
        return _build_dataset(self.cfg, self.base)

    def model_target(self) -> str:
        target = self.cfg["model"].get("target")
        if not target:
            targets = self.cfg.get("targets") or []
            if len(targets) != 1:
                raise ConfigError("model.target is required when config lists multiple targets")
            target = targets[0]
        return target


def _parse_depths(text) -> list[int]:
    if isinstance(text, list):
        return [int(d) for d in text]
    text = str(text)
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",") if p]


def cmd_clean(run: _Run) -> None:
    data, report = run.dataset()
    run.write_text("cleaned.csv", run.csv_stamp("clean") + data.to_csv())
    run.write_json("cleaning_report.json", report.to_json(), "clean")


def cmd_correlate(run: _Run) -> None:
    data, _ = run.dataset()
    columns = run.cfg["analysis"].get("correlate_columns") or data.column_names
    cm = corr_matrix(data, columns)
    run.write_text("correlation.csv", run.csv_stamp("correlate") + cm.to_csv())
    run.write_text(
        "correlation_heatmap.svg",
        svg.heatmap_svg(cm.names, cm.r, metadata=run.stamp("correlate")),
    )
    if cm.degenerate:
        run.write_json("correlation_notes.json", {"degenerate_columns": cm.degenerate}, "correlate")


def cmd_groups(run: _Run) -> None:
    data, _ = run.dataset()
    g = dict(run.cfg["analysis"].get("groups", {}))
    for key in ("column", "threshold", "outcome"):
        if key not in g:
            raise ConfigError(f"analysis.groups.{key} is required for `groups`")
    comparison = threshold_groups(data, g["column"], float(g["threshold"]), g["outcome"])
    run.write_json("groups.json", comparison.to_json(), "groups")
    outcome = data.column(g["outcome"])
    high = data.column(g["column"]) > float(g["threshold"])
    run.write_text(
        "groups_histogram.svg",
        svg.dual_histogram_svg(
            outcome[high],
            outcome[~high],
            label_a=f"{g['column']} > {g['threshold']}",
            label_b=f"{g['column']} <= {g['threshold']}",
            title=f"{g['outcome']} by {g['column']} threshold",
            x_label=g["outcome"],
            metadata=run.stamp("groups"),
        ),
    )
    regions = run.cfg["analysis"].get("regions")
    if regions:
        mapping = json.loads((run.base / regions["path"]).read_text(encoding="utf-8"))
        labels = [mapping.get(key[:2], "unmapped") for key in data.keys]
        summary = categorical_group_summary(data, labels, regions["outcome"])
        run.write_json("regional_summary.json", {"outcome": regions["outcome"], "regions": summary}, "groups")


def cmd_fit(run: _Run) -> None:
    data, _ = run.dataset()
    model_cfg = run.cfg["model"]
    target = run.model_target()
    y = data.column(target)
    kind = model_cfg.get("kind", "tree")
    if kind == "poly":
        feature = model_cfg.get("feature")
        if not feature:
            raise ConfigError("poly models need model.feature (or --feature)")
        x = data.column(feature)
        model = fit_poly(x, y, model_cfg.get("degree", 1), feature_name=feature, target_name=target)
        rep = residual_report(model, x, y)
        fitted = predict(model, x)
        grid = np.linspace(float(x.min()), float(x.max()), 200)
        run.write_json(
            "model.json",
            {
                "model": model.to_json(),
                "rmse": rep.rmse,
                "residual_spread_ratio": residual_spread_ratio(fitted, rep.residuals),
            },
            "fit",
        )
        run.write_text(
            "fit_curve.svg",
            svg.scatter_svg(
                x, y, grid, predict(model, grid),
                title=f"{target} vs {feature} (degree {model.degree})",
                x_label=feature, y_label=target, metadata=run.stamp("fit"),
            ),
        )
        run.write_text(
            "residuals.svg",
            svg.scatter_svg(
                fitted, rep.residuals,
                title="Residuals vs fitted", x_label="fitted", y_label="residual",
                metadata=run.stamp("fit"),
            ),
        )
        return

    features = _resolve_features(data, model_cfg, target)
    X = data.matrix(features)
    if kind == "tree":
        model = fit_tree(X, y, _tree_config(model_cfg), feature_names=features, target_name=target)
        run.write_json("model.json", {"tree": export_tree(model), "features": features}, "fit")
    elif kind == "forest":
        forest = fit_forest(
            X, y, _forest_config(model_cfg, run.seed),
            feature_names=features, target_name=target, n_jobs=run.n_jobs,
        )
        run.write_json("model.json", {"forest": export_forest(forest), "features": features}, "fit")
    else:
        raise ConfigError(f"unknown model kind {kind!r}")


def _cv_once(run: _Run, data: CleanDataset, model_cfg: dict, target: str, k: int) -> tuple[CvReport, list[str]]:
    features = _resolve_features(data, model_cfg, target)
    if model_cfg.get("kind", "tree") == "poly" and model_cfg.get("feature") not in features:
        raise ConfigError("model.feature must be among the resolved features")
    X = data.matrix(features)
    y = data.column(target)
    plan = kfold_plan(X.shape[0], k, run.seed)
    spec = _model_spec(model_cfg, data, features, run.seed)
    return cross_validate(X, y, spec, plan, n_jobs=run.n_jobs), features


def cmd_cv(run: _Run) -> None:
    data, _ = run.dataset()
    k = int(run.cfg["cv"].get("k", DEFAULT_K))
    target = run.model_target()
    report, features = _cv_once(run, data, run.cfg["model"], target, k)
    run.write_json(
        "cv_report.json",
        {"cv": report.to_json(), "features": features, "target": target,
         "model": run.cfg["model"]},
        "cv",
    )
    scores = [s for s in report.per_fold_r2 if s is not None]
    run.write_text(
        "cv_scores.svg",
        svg.histogram_svg(
            scores, bins=min(10, max(3, len(scores))),
            title=f"Fold R² for {target} (k={k})", x_label="fold R²",
            metadata=run.stamp("cv"),
        ),
    )


def cmd_sweep(run: _Run) -> None:
    data, _ = run.dataset()
    sweep_cfg = run.cfg["sweep"]
    model_cfg = run.cfg["model"]
    target = run.model_target()
    features = _resolve_features(data, model_cfg, target)
    X = data.matrix(features)
    y = data.column(target)
    depths = _parse_depths(sweep_cfg.get("depths", "1..10"))
    kind = sweep_cfg.get("model", model_cfg.get("kind", "tree"))
    if kind == "poly":
        raise ConfigError("depth sweeps apply to tree or forest models")
    train_idx, test_idx = train_test_split(
        X.shape[0], float(sweep_cfg.get("test_fraction", 0.3)), run.seed
    )
    report = depth_sweep(
        X[train_idx], y[train_idx], X[test_idx], y[test_idx],
        depths=depths, model_kind=kind, seed=run.seed,
        tau=float(sweep_cfg.get("tau", DEFAULT_OVERFIT_TOLERANCE)),
        n_trees=model_cfg.get("n_trees", 100),
        tree_config=_tree_config(model_cfg),
        n_jobs=run.n_jobs,
    )
    run.write_json(
        "sweep.json",
        {"sweep": report.to_json(), "features": features, "target": target},
        "sweep",
    )
    run.write_text(
        "sweep_curves.svg",
        svg.line_chart_svg(
            depths,
            [("train", report.train_r2, svg.TRAIN_COLOR), ("test", report.test_r2, svg.TEST_COLOR)],
            title=f"{kind} R² vs depth ({target})", x_label="max depth", y_label="R²",
            metadata=run.stamp("sweep"),
        ),
    )


def compare_cv_reports(a: CvReport, b: CvReport) -> None:
    """Refuse apples-to-oranges comparisons: both runs must share a fold plan."""
    if not a.plan.same_plan(b.plan):
        raise ConfigError(
            "cannot compare CV reports evaluated on different fold plans",
            plan_a=a.plan.to_json(),
            plan_b=b.plan.to_json(),
        )


def cmd_report(run: _Run) -> None:
    """Evaluate the same model on socioeconomic vs health-indicator features."""
    data, cleaning = run.dataset()
    report_cfg = run.cfg["report"]
    model_cfg = dict(run.cfg["model"])
    model_cfg["kind"] = report_cfg.get("model", model_cfg.get("kind", "forest"))
    target = report_cfg.get("target") or run.model_target()
    k = int(report_cfg.get("k", run.cfg["cv"].get("k", DEFAULT_K)))

    blocks = {}
    reports = []
    for feature_set in ("socioeconomic", "health_indicators"):
        cfg = dict(model_cfg)
        cfg["feature_set"] = feature_set
        cv, features = _cv_once(run, data, cfg, target, k)
        reports.append(cv)
        blocks[feature_set] = {"cv": cv.to_json(), "features": features}
    compare_cv_reports(reports[0], reports[1])

    table = [
        {
            "feature_set": name,
            "mean_r2": blocks[name]["cv"]["mean_r2"],
            "std_r2": blocks[name]["cv"]["std_r2"],
            "n_features": len(blocks[name]["features"]),
        }
        for name in ("socioeconomic", "health_indicators")
    ]
    run.write_json(
        "report.json",
        {
            "target": target,
            "model_kind": model_cfg["kind"],
            "k": k,
            "feature_sets": blocks,
            "comparison": table,
            "cleaning": cleaning.to_json(),
        },
        "report",
    )


COMMANDS = {
    "clean": cmd_clean,
    "correlate": cmd_correlate,
    "groups": cmd_groups,
    "fit": cmd_fit,
    "cv": cmd_cv,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tractwise",
        description="Clean tract tables, explore correlations, and fit/evaluate "
        "regression models, emitting deterministic CSV/JSON/SVG artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("clean", "join and clean the configured tables"),
        ("correlate", "emit the correlation matrix and heatmap"),
        ("groups", "compare an outcome across a threshold split"),
        ("fit", "fit a poly, tree, or forest model"),
        ("cv", "k-fold cross-validate the configured model"),
        ("sweep", "train/test R² versus tree depth"),
        ("report", "compare feature sets under identical fold plans"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (default from config)")
        p.add_argument("--n-jobs", dest="n_jobs", type=int, default=1,
                       help="threads for forest fitting")
        if name in ("fit", "cv", "sweep", "report"):
            p.add_argument("--model", choices=["poly", "tree", "forest"])
            p.add_argument("--target", help="outcome column to model")
        if name == "fit":
            p.add_argument("--degree", type=int, help="polynomial degree (1-4)")
            p.add_argument("--feature", help="feature column for poly models")
            p.add_argument("--max-depth", dest="max_depth", type=int)
            p.add_argument("--n-trees", dest="n_trees", type=int)
        if name == "cv":
            p.add_argument("--k", type=int, help="fold count (default 5)")
        if name == "sweep":
            p.add_argument("--depths", help="e.g. 1..15 or 1,2,4,8")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = _Run(args)
        COMMANDS[args.command](run)
    except TractwiseError as e:
        sys.stderr.write(json.dumps(e.to_json(), sort_keys=True) + "\n")
        return 2 if isinstance(e, ConfigError) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
