"""End-to-end tests for the command-line interface (exit codes, formats)."""

import json
import os
import subprocess
import sys

import pytest

import specres.cli as cli
from specres.norms import NumericalError


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_toml(path, text):
    path.write_text(text)
    return str(path)


SWEEP_CONFIG = """
seed = 1

[model]
kind = "torus"
n = 1
K = 8

[sweep]
quantity = "cluster-2q"
q = [6.0]
lambda = [1.0, 2.0]
eps = 1.0

[output]
prefix = "run"
formats = ["json", "csv", "plotdata"]
"""

PERTURB_CONFIG = """
[model]
kind = "torus"
n = 2
K = 4

[potential]
kind = "single-bump"
p = 1.5
height = {height}

[pipeline]
q = 6.0
lambda = [1.0, 2.0]

[iteration]
restarts = 2
max_iters = 150
tolerance = 1e-9
seed = 0
"""


class TestModelCommands:
    def test_build_writes_model_file(self, tmp_path, capsys):
        out = str(tmp_path / "t.json")
        code, stdout, _ = run_cli(
            capsys, "model", "build", "--kind", "torus",
            "--param", "n=1", "--param", "K=2", "--out", out,
        )
        assert code == 0
        assert "torus1d-K2-G9" in stdout and "trusted_lambda=0.5" in stdout
        assert json.load(open(out))["schema"] == "spectral-model/1"

    def test_cache_build_then_hit(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SPECRES_CACHE_DIR", str(tmp_path))
        argv = ("model", "cache", "--kind", "torus", "--param", "n=1", "--param", "K=2")
        code, stdout, _ = run_cli(capsys, *argv)
        assert code == 0 and stdout.startswith("built ")
        code, stdout, _ = run_cli(capsys, *argv)
        assert code == 0 and stdout.startswith("cached ")
        assert os.listdir(str(tmp_path)) == ["torus_K2_n1.json"]

    def test_param_parsing_types(self):
        assert cli._parse_param("K=4") == ("K", 4)
        assert cli._parse_param("delta=0.25") == ("delta", 0.25)
        assert cli._parse_param("kind=torus") == ("kind", "torus")
        with pytest.raises(ValueError, match="KEY=VALUE"):
            cli._parse_param("K")


class TestNormsCommand:
    def test_cached_model_matches_live_build(self, tmp_path, capsys):
        out = str(tmp_path / "t.json")
        assert run_cli(capsys, "model", "build", "--kind", "torus",
                       "--param", "n=1", "--param", "K=8", "--out", out)[0] == 0
        common = ("--quantity", "cluster-2q", "--q", "6", "--lam", "1.0",
                  "--eps", "1.0", "--seed", "0")
        code, from_file, _ = run_cli(capsys, "norms", "--model", out, *common)
        assert code == 0
        code, live, _ = run_cli(capsys, "norms", "--kind", "torus",
                                "--param", "n=1", "--param", "K=8", *common)
        assert code == 0
        a, b = json.loads(from_file), json.loads(live)
        assert a["model"] == b["model"] == "torus1d-K8-G33"
        assert a["lower"] == pytest.approx(b["lower"], rel=1e-10)
        assert a["lower"] <= a["upper"]

    def test_requires_a_model_source(self, capsys):
        code, _, stderr = run_cli(capsys, "norms", "--quantity", "cluster-2q",
                                  "--q", "6", "--lam", "1.0")
        assert code == 2
        assert "either --model FILE or --kind" in stderr


class TestVerifyCommand:
    def test_multiplier_lemma_stream(self, capsys):
        code, stdout, _ = run_cli(
            capsys, "verify", "--estimate", "L3.1", "--count", "2", "--seed", "3"
        )
        assert code == 0
        lines = [json.loads(line) for line in stdout.splitlines()]
        assert len(lines) == 2
        assert all(entry["passed"] for entry in lines)
        assert {entry["estimate"] for entry in lines} == {"L3.1"}

    def test_window_comparison_variants(self, capsys):
        code, stdout, _ = run_cli(
            capsys, "verify", "--estimate", "C3.4", "--count", "1"
        )
        assert code == 0
        ids = [json.loads(line)["estimate"] for line in stdout.splitlines()]
        assert len(ids) == 5
        assert {"C(a<->b)", "C(b->c)", "C(c->a)", "3.10", "3.11"} == set(ids)

    def test_resolvent_estimate_item(self, capsys):
        code, stdout, _ = run_cli(
            capsys, "verify", "--estimate", "3.3", "--count", "2"
        )
        assert code == 0
        assert all(json.loads(line)["passed"] for line in stdout.splitlines())


class TestSweepAndReportCommands:
    def test_sweep_emits_and_report_converts(self, tmp_path, capsys):
        config = write_toml(tmp_path / "sweep.toml", SWEEP_CONFIG)
        out_dir = str(tmp_path / "out")
        code, stdout, _ = run_cli(capsys, "sweep", "--config", config, "--out", out_dir)
        assert code == 0
        paths = stdout.splitlines()
        report_json = os.path.join(out_dir, "run.json")
        report_csv = os.path.join(out_dir, "run.csv")
        assert report_json in paths and report_csv in paths
        assert any("plotdata" in p and p.endswith(".dat") for p in paths)

        doc = json.load(open(report_json))
        assert doc["schema"] == "spectral-report/1"
        assert len(doc["records"]) == 2
        assert doc["config"]["sweep"]["quantity"] == "cluster-2q"

        converted = str(tmp_path / "again.csv")
        code, stdout, _ = run_cli(capsys, "report", "--in", report_json,
                                  "--format", "csv", "--out", converted)
        assert code == 0
        assert open(converted, "rb").read() == open(report_csv, "rb").read()

    def test_missing_config_is_usage_error(self, tmp_path, capsys):
        code, _, stderr = run_cli(capsys, "sweep", "--config",
                                  str(tmp_path / "nope.toml"))
        assert code == 2 and stderr.startswith("error:")

    def test_report_rejects_non_report_input(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"schema": "other/1"}))
        code, _, stderr = run_cli(capsys, "report", "--in", str(bad), "--format", "csv",
                                  "--out", str(tmp_path / "x.csv"))
        assert code == 2 and "schema" in stderr


class TestPerturbCommand:
    def test_sub_threshold_potential_verifies(self, tmp_path, capsys):
        config = write_toml(tmp_path / "p.toml",
                            PERTURB_CONFIG.format(height=0.05))
        code, stdout, _ = run_cli(capsys, "perturb", "--config", config)
        assert code == 0
        report = json.loads(stdout)
        assert report["verified"] is True
        assert report["Lambda0"] <= 1.0

    def test_super_threshold_potential_fails(self, tmp_path, capsys):
        config = write_toml(tmp_path / "p.toml",
                            PERTURB_CONFIG.format(height=60.0))
        code, stdout, _ = run_cli(capsys, "perturb", "--config", config)
        assert code == 1
        assert json.loads(stdout)["verified"] is False

    def test_unused_pipeline_keys_rejected(self, tmp_path, capsys):
        text = PERTURB_CONFIG.format(height=0.05).replace(
            "[iteration]", "speed = 9\n\n[iteration]"
        )
        code, _, stderr = run_cli(capsys, "perturb", "--config",
                                  write_toml(tmp_path / "p.toml", text))
        assert code == 2 and "unused pipeline keys" in stderr


class TestExitCodes:
    def test_argparse_rejects_unknown_subcommand(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["transmogrify"])
        assert info.value.code == 2

    def test_numerical_failure_maps_to_3(self, tmp_path, capsys, monkeypatch):
        def explode(config):
            raise NumericalError("iteration diverged")

        monkeypatch.setattr(cli, "run_sweep", explode)
        config = write_toml(tmp_path / "sweep.toml", SWEEP_CONFIG)
        code, _, stderr = run_cli(capsys, "sweep", "--config", config)
        assert code == 3
        assert stderr.startswith("numerical failure:")

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "specres.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        for name in ("model", "norms", "verify", "sweep", "perturb", "report"):
            assert name in proc.stdout
