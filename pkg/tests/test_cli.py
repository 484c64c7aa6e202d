import json

import numpy as np
import pytest

from tractwise.cli import compare_cv_reports, main
from tractwise.errors import ConfigError
from tractwise.evaluation import CvReport, kfold_plan


def run_cli(*argv):
    return main(list(argv))


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture()
def tiny_config(fixtures_dir):
    return str(fixtures_dir / "tiny" / "config.json")


@pytest.fixture()
def synth_config(fixtures_dir):
    return str(fixtures_dir / "synth" / "config.json")


class TestClean:
    def test_tiny_fixture_exact_discard_counts(self, tiny_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("clean", "--config", tiny_config, "--out", str(out)) == 0
        report = read_json(out / "cleaning_report.json")
        assert report["source_rows"] == 6
        assert report["kept"] == 2
        assert report["discard_reasons"] == {
            "non_matching": 2,
            "null_value": 1,
            "range_violation": 1,
        }
        header = (out / "cleaned.csv").read_text().splitlines()[1]
        assert header.startswith("tract,")

    def test_clean_reruns_byte_identical(self, tiny_config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli("clean", "--config", tiny_config, "--out", str(a))
        run_cli("clean", "--config", tiny_config, "--out", str(b))
        assert (a / "cleaned.csv").read_bytes() == (b / "cleaned.csv").read_bytes()
        assert (a / "cleaning_report.json").read_bytes() == (b / "cleaning_report.json").read_bytes()

    def test_synth_fixture_accounting_balances(self, synth_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("clean", "--config", synth_config, "--out", str(out)) == 0
        report = read_json(out / "cleaning_report.json")
        assert report["source_rows"] == report["kept"] + sum(report["discard_reasons"].values())
        assert report["kept"] == 118


class TestErrors:
    def test_missing_config_gives_error_json(self, tmp_path, capsys):
        code = run_cli("clean", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path))
        assert code == 2
        err = json.loads(capsys.readouterr().err)
        assert err["code"] == "config_error"
        assert "message" in err and "context" in err

    def test_bad_schema_version(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"schema": 99}')
        assert run_cli("clean", "--config", str(cfg)) == 2
        assert "schema" in json.loads(capsys.readouterr().err)["message"]

    def test_missing_source_column(self, fixtures_dir, tmp_path, capsys):
        cfg = json.loads((fixtures_dir / "tiny" / "config.json").read_text())
        cfg["tables"][0]["columns"][1]["source"] = "income_xyz"
        p = tmp_path / "c.json"
        # keep relative paths working by pointing at the fixture directory
        for t in cfg["tables"]:
            t["path"] = str(fixtures_dir / "tiny" / t["path"])
        p.write_text(json.dumps(cfg))
        assert run_cli("clean", "--config", str(p), "--out", str(tmp_path / "o")) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["code"] == "missing_column"
        assert "income_xyz" in err["message"]


class TestExploration:
    def test_correlate_outputs(self, synth_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("correlate", "--config", synth_config, "--out", str(out)) == 0
        lines = (out / "correlation.csv").read_text().splitlines()
        assert lines[0].startswith("#")
        assert (out / "correlation_heatmap.svg").exists()

    def test_groups_outputs(self, synth_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("groups", "--config", synth_config, "--out", str(out)) == 0
        doc = read_json(out / "groups.json")
        assert {g["label"] for g in doc["groups"]} == {"high", "low"}
        # better-educated tracts report less bad physical health in the fixture
        assert doc["mean_difference"] < 0
        regional = read_json(out / "regional_summary.json")
        assert set(regional["regions"]) == {"South", "West", "Midwest", "Northeast"}


class TestFit:
    def test_tree_fit_deterministic(self, synth_config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run_cli(
                "fit", "--config", synth_config, "--out", str(out),
                "--model", "tree", "--max-depth", "3",
            ) == 0
        assert (a / "model.json").read_bytes() == (b / "model.json").read_bytes()
        doc = read_json(a / "model.json")
        assert doc["tree"]["config"]["max_depth"] == 3
        assert doc["seed"] == 20170601

    def test_poly_fit_artifacts(self, synth_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli(
            "fit", "--config", synth_config, "--out", str(out),
            "--model", "poly", "--degree", "2", "--feature", "median_income",
        ) == 0
        doc = read_json(out / "model.json")
        assert doc["model"]["degree"] == 2
        assert len(doc["model"]["coefficients"]) == 3
        assert 0 < doc["model"]["train_r2"] <= 1
        assert (out / "fit_curve.svg").exists() and (out / "residuals.svg").exists()

    def test_forest_fit_embeds_audit_indices(self, synth_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("fit", "--config", synth_config, "--out", str(out), "--model", "forest") == 0
        doc = read_json(out / "model.json")
        assert len(doc["forest"]["trees"]) == 25
        assert len(doc["forest"]["per_tree_row_indices"]) == 25


class TestEvaluationCommands:
    def test_cv_report_structure(self, synth_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("cv", "--config", synth_config, "--out", str(out), "--k", "5") == 0
        doc = read_json(out / "cv_report.json")
        assert len(doc["cv"]["per_fold_r2"]) == 5
        assert doc["cv"]["plan"]["k"] == 5
        assert (out / "cv_scores.svg").exists()

    def test_sweep_curves(self, synth_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("sweep", "--config", synth_config, "--out", str(out), "--depths", "1..6") == 0
        doc = read_json(out / "sweep.json")
        assert doc["sweep"]["depths"] == [1, 2, 3, 4, 5, 6]
        train = doc["sweep"]["train_r2"]
        assert all(b >= a - 1e-12 for a, b in zip(train, train[1:]))
        assert (out / "sweep_curves.svg").exists()

    def test_report_compares_feature_sets_on_one_plan(self, synth_config, tmp_path):
        out = tmp_path / "out"
        assert run_cli("report", "--config", synth_config, "--out", str(out)) == 0
        doc = read_json(out / "report.json")
        sets = doc["feature_sets"]
        assert set(sets) == {"socioeconomic", "health_indicators"}
        assert sets["socioeconomic"]["cv"]["plan"] == sets["health_indicators"]["cv"]["plan"]
        assert len(sets["health_indicators"]["features"]) == 4
        assert [row["feature_set"] for row in doc["comparison"]] == [
            "socioeconomic", "health_indicators",
        ]

    def test_cv_sweep_rerun_byte_identical(self, synth_config, tmp_path):
        pairs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert run_cli("cv", "--config", synth_config, "--out", str(out)) == 0
            assert run_cli("sweep", "--config", synth_config, "--out", str(out), "--depths", "1..4") == 0
            pairs.append(out)
        for name in ("cv_report.json", "cv_scores.svg", "sweep.json", "sweep_curves.svg"):
            assert (pairs[0] / name).read_bytes() == (pairs[1] / name).read_bytes()


class TestCompareGuard:
    def test_mismatched_plans_refused(self):
        plan_a = kfold_plan(40, 5, seed=1)
        plan_b = kfold_plan(40, 5, seed=2)
        scores = [0.5, 0.6, 0.7, 0.8, 0.9]
        a = CvReport(scores, float(np.mean(scores)), float(np.std(scores)), [], plan_a)
        b = CvReport(scores, float(np.mean(scores)), float(np.std(scores)), [], plan_b)
        with pytest.raises(ConfigError):
            compare_cv_reports(a, b)
        compare_cv_reports(a, a)
