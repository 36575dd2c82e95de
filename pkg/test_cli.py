"""Tests for the command-line interface."""

import csv
import json

import pytest
from typer.testing import CliRunner

from vrmix.cli import app
from vrmix.models import RunStatus
from vrmix.run_service import run_service

runner = CliRunner()

SVM_SMALL = ["--n", "60", "--iterations", "20", "--eval-every", "10"]
LINREG_SMALL = ["--n", "30", "--d", "3", "-b", "2", "--iterations", "10", "--eval-every", "5", "--regularizers", "1,10"]
KMEANS_SMALL = ["--n", "200", "--d", "2", "--clusters", "5", "--components", "3", "-b", "5", "--iterations", "10", "--eval-every", "5"]


def _summary(path):
    return json.loads((path / "summary.json").read_text())


def test_version():
    result = runner.invoke(app, ["version"])
    assert result.exit_code == 0
    assert "vrmix" in result.stdout


class TestRegretSim:
    def test_missing_horizon_is_a_usage_error(self, tmp_path):
        result = runner.invoke(app, ["regret-sim", "-o", str(tmp_path)])
        assert result.exit_code == 2

    def test_unknown_adversary_is_a_usage_error(self, tmp_path):
        result = runner.invoke(app, ["regret-sim", "--T", "100", "--adversary", "bogus", "-o", str(tmp_path)])
        assert result.exit_code == 2

    def test_horizon_below_three_is_rejected(self, tmp_path):
        result = runner.invoke(app, ["regret-sim", "--T", "2", "-o", str(tmp_path)])
        assert result.exit_code == 2

    def test_ledger_is_deterministic(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        for out in (first, second):
            result = runner.invoke(
                app, ["regret-sim", "--adversary", "constant", "--T", "200", "--seed", "7", "-o", str(out)]
            )
            assert result.exit_code == 0, result.stdout
        assert (first / "ledger.csv").read_bytes() == (second / "ledger.csv").read_bytes()
        assert (first / "curve.csv").exists()
        summary = _summary(first)
        assert summary["config"]["horizons"] == [200]
        assert summary["failed_seeds"] == []
        assert summary["runs"][0]["seed"] == 7
        ledger = json.loads((first / "ledger.config.json").read_text())
        assert (ledger["T"], ledger["seed"]) == (200, 7)
        assert ledger["config"]["adversary"] == "constant"
        assert json.loads((first / "curve.config.json").read_text())["config"]["horizons"] == [200]

    def test_unknown_config_key_is_a_usage_error(self, tmp_path):
        config = tmp_path / "sim.ini"
        config.write_text("[vrmix]\nT = 100\nphase-lenght = 4\n")
        result = runner.invoke(app, ["regret-sim", "-c", str(config), "-o", str(tmp_path / "out")])
        assert result.exit_code == 2

    def test_several_horizons_and_seeds(self, tmp_path):
        result = runner.invoke(app, ["regret-sim", "--T", "40,80", "--seeds", "1..2", "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout
        for T in (40, 80):
            for seed in (1, 2):
                assert (tmp_path / f"ledger_T{T}_seed{seed}.csv").exists()
        summary = _summary(tmp_path)
        assert summary["horizons"] == [40, 80]
        assert len(summary["runs"]) == 4
        with (tmp_path / "curve.csv").open() as fh:
            assert next(csv.reader(fh)) == ["T", "seed", "t", "regret"]


class TestExperiments:
    def test_svm_blobs_artifacts(self, tmp_path):
        result = runner.invoke(app, ["svm-blobs", "--seeds", "1..2", *SVM_SMALL, "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout
        for seed in (1, 2):
            with (tmp_path / f"result_{seed}.csv").open() as fh:
                rows = list(csv.reader(fh))
            assert rows[0] == ["iter", "metric", "sampler", "seed"]
            assert [row[0] for row in rows[1:]] == ["10", "20"]
        summary = _summary(tmp_path)
        assert summary["metric"] == "accuracy"
        assert [run["seed"] for run in summary["runs"]] == [1, 2]
        assert len(summary["aggregate"]) == 2

        runs = run_service.get_runs(kind="svm-blobs")
        assert len(runs) == 2
        assert all(run.status == RunStatus.COMPLETED for run in runs)

    def test_linreg_unbiased_truncation(self, tmp_path):
        result = runner.invoke(app, ["linreg-dpp", "--trunc", "1.0,0.0", *LINREG_SMALL, "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout
        summary = _summary(tmp_path)
        assert summary["unbiased"] is True
        assert summary["config"]["trunc"] == [1.0, 0.0]

    def test_linreg_bad_truncation(self, tmp_path):
        result = runner.invoke(app, ["linreg-dpp", "--trunc", "1,2,3", "-o", str(tmp_path)])
        assert result.exit_code == 2

    def test_kmeans_uniform(self, tmp_path):
        result = runner.invoke(app, ["kmeans", "--sampler", "uniform", *KMEANS_SMALL, "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout
        summary = _summary(tmp_path)
        assert summary["metric"] == "test_loss"
        assert summary["runs"][0]["final_weights"] == [1.0]

    def test_kmeans_missing_points_file(self, tmp_path):
        result = runner.invoke(app, ["kmeans", "--points", str(tmp_path / "none.csv"), "-o", str(tmp_path)])
        assert result.exit_code == 2

    def test_failed_seed_exits_nonzero(self, tmp_path):
        points = tmp_path / "points.csv"
        points.write_text("1,2\n3,4\n5,6\n")
        result = runner.invoke(app, ["kmeans", "--points", str(points), "--clusters", "5", "-o", str(tmp_path)])
        assert result.exit_code == 1
        assert _summary(tmp_path)["failed_seeds"] == [0]

    def test_flags_override_config_file(self, tmp_path):
        config = tmp_path / "svm.ini"
        config.write_text("[vrmix]\nn = 60\niterations = 20\neval-every = 10\nseeds = 1..2\n")
        out = tmp_path / "out"
        result = runner.invoke(app, ["svm-blobs", "-c", str(config), "--iterations", "10", "-o", str(out)])
        assert result.exit_code == 0, result.stdout
        cfg = _summary(out)["config"]
        assert cfg["n"] == 60
        assert cfg["iterations"] == 10
        assert cfg["eval_every"] == 10
        assert cfg["seeds"] == [1, 2]

    def test_missing_config_file(self, tmp_path):
        result = runner.invoke(app, ["svm-blobs", "-c", str(tmp_path / "none.ini"), "-o", str(tmp_path)])
        assert result.exit_code == 2

    def test_unknown_config_key_is_a_usage_error(self, tmp_path):
        config = tmp_path / "svm.ini"
        config.write_text("[vrmix]\nn = 60\nbatchsize = 3\n")
        result = runner.invoke(app, ["svm-blobs", "-c", str(config), "-o", str(tmp_path / "out")])
        assert result.exit_code == 2

    def test_tuned_run_reports_the_choice(self, tmp_path):
        result = runner.invoke(
            app,
            ["svm-blobs", "--tune", "--tune-betas", "1", "--tune-gammas", "0.1,0.3", *SVM_SMALL, "-o", str(tmp_path)],
        )
        assert result.exit_code == 0, result.stdout
        summary = _summary(tmp_path)
        assert summary["config"]["tune"] is True
        assert summary["config"]["tune_gammas"] == [0.1, 0.3]
        extra = summary["runs"][0]["extra"]
        assert extra["tuned_beta"] == 1.0
        assert extra["tuned_gamma"] in (0.1, 0.3)

    def test_bad_tuning_grid(self, tmp_path):
        result = runner.invoke(app, ["svm-blobs", "--tune", "--tune-gammas", "0.1,2", *SVM_SMALL, "-o", str(tmp_path)])
        assert result.exit_code == 2

    def test_artifacts_carry_the_resolved_config(self, tmp_path):
        result = runner.invoke(app, ["svm-blobs", "--seeds", "1..2", *SVM_SMALL, "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout
        for seed in (1, 2):
            sidecar = json.loads((tmp_path / f"result_{seed}.config.json").read_text())
            assert sidecar["seed"] == seed
            assert sidecar["config"]["n"] == 60
            assert sidecar["cli"]["subcommand"] == "svm-blobs"
        aggregate = json.loads((tmp_path / "aggregate.config.json").read_text())
        assert aggregate["config"]["seeds"] == [1, 2]


def test_project_test(tmp_path):
    result = runner.invoke(app, ["project-test", "--trials", "30", "--seed", "1", "-o", str(tmp_path)])
    assert result.exit_code == 0, result.stdout
    assert (tmp_path / "project_test.csv").exists()
    summary = _summary(tmp_path)
    assert summary["failures"] == 0
    assert summary["max_distance"] <= 2e-3
    sidecar = json.loads((tmp_path / "project_test.config.json").read_text())
    assert sidecar["config"]["trials"] == 30
    assert sidecar["cli"]["subcommand"] == "project-test"


class TestRuns:
    @pytest.fixture
    def recorded(self, tmp_path):
        result = runner.invoke(app, ["svm-blobs", "--seed", "4", *SVM_SMALL, "-o", str(tmp_path)])
        assert result.exit_code == 0, result.stdout
        return run_service.get_runs()[0]

    def test_list(self, recorded):
        result = runner.invoke(app, ["runs", "list"])
        assert result.exit_code == 0
        assert "No runs found" not in result.stdout
        assert "Runs" in result.stdout

    def test_list_empty(self):
        result = runner.invoke(app, ["runs", "list", "--status", "failed"])
        assert result.exit_code == 0
        assert "No runs found" in result.stdout

    def test_show_by_prefix(self, recorded):
        result = runner.invoke(app, ["runs", "show", str(recorded.id)[:8]])
        assert result.exit_code == 0
        assert str(recorded.id) in result.stdout

    def test_show_unknown(self):
        result = runner.invoke(app, ["runs", "show", "deadbeef"])
        assert result.exit_code == 1

    def test_unknown_action(self):
        result = runner.invoke(app, ["runs", "bogus"])
        assert result.exit_code == 2

    def test_clear(self, recorded):
        result = runner.invoke(app, ["runs", "clear", "--days", "0"])
        assert result.exit_code == 0
        assert "Cleared" in result.stdout
