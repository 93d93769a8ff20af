import json
import subprocess
import sys

import numpy as np
import pytest

from sonoguard.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from sonoguard.imgcore import read_gf32, read_png


def _run_cfg(tmp_path, **overrides):
    cfg = dict(seed=11, cases=2, width=64, height=64, iterations=3, population=2, budget=6)
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestGenData:
    def test_writes_dataset_and_manifest(self, tmp_path):
        out = tmp_path / "data"
        rc = main(["gen-data", "--seed", "7", "--count", "3", "--size", "64x64", "--out", str(out)])
        assert rc == EXIT_OK
        for case in range(3):
            assert (out / f"case_{case:03d}.png").exists()
            assert (out / f"case_{case:03d}.gf32").exists()
            assert (out / f"case_{case:03d}_truth.png").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 7
        assert manifest["width"] == 64 and manifest["height"] == 64
        assert len(manifest["cases"]) == 3
        assert manifest["cases"][0]["image_png"] == "case_000.png"

    def test_gf32_and_png_views_agree(self, tmp_path):
        out = tmp_path / "data"
        main(["gen-data", "--seed", "7", "--count", "1", "--size", "64x64", "--out", str(out)])
        exact = read_gf32(out / "case_000.gf32")
        quantized = read_png(out / "case_000.png")
        assert np.abs(exact.data - quantized.data).max() <= 0.5 / 255.0 + 1e-6
        truth = read_png(out / "case_000_truth.png")
        assert set(np.unique(truth.data)).issubset({0.0, 1.0})

    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            main(["gen-data", "--seed", "3", "--count", "2", "--size", "64x64", "--out", str(out)])
        for name in ("case_000.gf32", "case_001.gf32", "manifest.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_bad_size_is_config_error(self, tmp_path):
        rc = main(["gen-data", "--size", "banana", "--out", str(tmp_path / "x")])
        assert rc == EXIT_CONFIG


class TestRun:
    def test_full_run_writes_reports_and_figures(self, tmp_path):
        out = tmp_path / "results"
        cfg = _run_cfg(tmp_path, out=str(out))
        rc = main(["run", "--config", str(cfg)])
        assert rc == EXIT_OK
        for name in (
            "table1_conditions.csv",
            "table2_clean_cost.csv",
            "table3_stats.csv",
            "results.json",
            "figure_metrics_bars.svg",
            "figure_attack_traces.svg",
        ):
            assert (out / name).exists(), name

    def test_flags_override_config_file(self, tmp_path):
        out = tmp_path / "results"
        cfg = _run_cfg(tmp_path, out=str(out), cases=2)
        rc = main(["run", "--config", str(cfg), "--cases", "1"])
        assert rc == EXIT_OK
        payload = json.loads((out / "results.json").read_text())
        assert payload["config"]["cases"] == 1

    def test_missing_config_file_is_config_error(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG

    def test_malformed_json_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert main(["run", "--config", str(bad)]) == EXIT_CONFIG

    def test_unknown_key_is_config_error(self, tmp_path):
        cfg = _run_cfg(tmp_path, bogus=1)
        assert main(["run", "--config", str(cfg)]) == EXIT_CONFIG

    def test_invalid_budget_is_config_error(self, tmp_path):
        cfg = _run_cfg(tmp_path, budget=5)  # cannot cover 3x2 queries
        assert main(["run", "--config", str(cfg)]) == EXIT_CONFIG

    def test_unreachable_model_is_runtime_error(self, tmp_path):
        out = tmp_path / "results"
        cfg = _run_cfg(tmp_path, out=str(out), cases=1, iterations=1, population=1, budget=1)
        rc = main(["run", "--config", str(cfg), "--model-url", "http://127.0.0.1:9"])
        assert rc == EXIT_RUNTIME
        assert not (out / "results.json").exists()

    def test_env_var_supplies_model_url(self, tmp_path, monkeypatch, echo_probs):
        out = tmp_path / "results"
        cfg = _run_cfg(tmp_path, out=str(out), cases=1, iterations=1, population=1, budget=1)
        monkeypatch.setenv("SONOGUARD_MODEL_URL", echo_probs)
        rc = main(["run", "--config", str(cfg)])
        assert rc == EXIT_OK
        payload = json.loads((out / "results.json").read_text())
        assert payload["config"]["model"] == echo_probs


class TestReport:
    def test_reemits_identical_results_json(self, tmp_path):
        out = tmp_path / "results"
        cfg = _run_cfg(tmp_path, out=str(out))
        assert main(["run", "--config", str(cfg)]) == EXIT_OK
        re_out = tmp_path / "rebuilt"
        rc = main(["report", "--results", str(out / "results.json"), "--out", str(re_out)])
        assert rc == EXIT_OK
        assert (re_out / "results.json").read_bytes() == (out / "results.json").read_bytes()
        assert (re_out / "table1_conditions.csv").read_bytes() == (out / "table1_conditions.csv").read_bytes()
        assert (re_out / "figure_metrics_bars.svg").exists()

    def test_missing_results_is_config_error(self, tmp_path):
        assert main(["report", "--results", str(tmp_path / "no.json"), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_malformed_results_is_config_error(self, tmp_path):
        bad = tmp_path / "results.json"
        bad.write_text('{"schema": 1}')
        assert main(["report", "--results", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


class TestArgumentErrors:
    def test_unknown_subcommand_is_config_error(self):
        assert main(["frobnicate"]) == EXIT_CONFIG

    def test_missing_required_flag_is_config_error(self):
        assert main(["gen-data"]) == EXIT_CONFIG


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sonoguard.cli", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "gen-data" in proc.stdout and "run" in proc.stdout and "report" in proc.stdout
