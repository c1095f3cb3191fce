import json
import subprocess
import sys

import pytest

from ccakit.cli import main, resolve_config
from ccakit.errors import ConfigError


def run_cli(args):
    """Run the CLI in-process; returns (exit_code,)."""
    return main([str(a) for a in args])


def synth_files(tmp_path, n=300, p=4, q=3, rho="0.8", seed=11, extra=()):
    out = tmp_path / "data"
    code = run_cli(["synth", "--n", n, "--p", p, "--q", q, "--rho", rho,
                    "--seed", seed, "--output-dir", out, *extra])
    assert code == 0
    return out / "x.csv", out / "y.csv"


def base_config(tmp_path, x_csv, y_csv, **model):
    cfg = {
        "input": {"x_csv": str(x_csv), "y_csv": str(y_csv)},
        "model": model or {"variant": "classical"},
        "inference": {"n_perm": 99},
        "seed": 7,
        "output_dir": str(tmp_path / "out"),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path, cfg


class TestConfig:
    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="modle"):
            resolve_config({"seed": 1, "modle": {}})

    def test_nested_unknown_key_named(self):
        with pytest.raises(ConfigError, match=r"model\.variantt"):
            resolve_config({"seed": 1, "input": {"x_csv": "a", "y_csv": "b"},
                            "model": {"variantt": "classical"}})

    def test_seed_required(self):
        with pytest.raises(ConfigError, match="seed"):
            resolve_config({"input": {"x_csv": "a", "y_csv": "b"}})

    def test_sparse_requires_budgets(self):
        with pytest.raises(ConfigError, match="c1"):
            resolve_config({"seed": 1, "input": {"x_csv": "a", "y_csv": "b"},
                            "model": {"variant": "sparse"}})

    def test_exactly_one_input_form(self):
        with pytest.raises(ConfigError, match="input"):
            resolve_config({"seed": 1, "model": {"variant": "classical"}})

    def test_config_version_checked(self):
        with pytest.raises(ConfigError, match="config_version"):
            resolve_config({"seed": 1, "config_version": "99",
                            "input": {"x_csv": "a", "y_csv": "b"}})


class TestSubcommands:
    def test_fit_happy_path(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path)
        cfg_path, cfg = base_config(tmp_path, x_csv, y_csv)
        assert run_cli(["fit", "--config", cfg_path]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert len(report["in_sample_correlations"]) == 3
        assert report["software"]["name"] == "ccakit"
        assert report["seed"] == 7
        assert "fit" in report["stages"]
        for name in ("weights.csv", "loadings.csv", "variates.csv"):
            assert (tmp_path / "out" / name).exists()

    def test_permute_planted_mode_significant(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=2000, p=4, q=4, rho="0.8", seed=3)
        cfg_path, _ = base_config(tmp_path, x_csv, y_csv)
        assert run_cli(["permute", "--config", cfg_path, "--n-perm", 999]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        perm = report["inference"]["permutation"]
        assert perm["p_raw"][0] <= 0.001
        assert (tmp_path / "out" / "null_distribution.csv").exists()
        sel = report["inference"]["mode_selection"]["permutation"]
        assert sel["selected"] >= 1

    def test_holdout_band(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=2500, p=5, q=5, rho="0.8", seed=5)
        cfg_path, _ = base_config(tmp_path, x_csv, y_csv)
        assert run_cli(["holdout", "--config", cfg_path, "--split", 0.8,
                        "--n-perm", 99]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        hold = report["inference"]["holdout"]
        assert 0.7 <= hold["holdout_correlations"][0] <= 0.9
        # in-sample and hold-out figures live in separate fields
        assert "holdout_correlations" in hold
        assert "in_sample_correlations" in report

    def test_sensitivity_outputs(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=400, p=4, q=4)
        cfg_path, _ = base_config(tmp_path, x_csv, y_csv)
        assert run_cli(["sensitivity", "--config", cfg_path]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        rows = report["diagnostics"]["sensitivity"]["rows"]
        assert rows and {"target", "mode", "score"} <= set(rows[0])
        assert (tmp_path / "out" / "sensitivity.csv").exists()

    def test_sensitivity_groups_file(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=400, p=4, q=4)
        groups = tmp_path / "groups.json"
        groups.write_text(json.dumps({"pair": ["x1", "x2"], "solo": ["x4"]}))
        cfg = {
            "input": {"x_csv": str(x_csv), "y_csv": str(y_csv)},
            "model": {"variant": "classical", "k": 2},
            "diagnostics": {"sensitivity": True, "side": "left",
                            "groups_file": str(groups)},
            "seed": 6,
            "output_dir": str(tmp_path / "out"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert run_cli(["sensitivity", "--config", cfg_path]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        targets = {r["target"] for r in report["diagnostics"]["sensitivity"]["rows"]}
        assert targets == {"pair", "solo"}

    def test_dispersion_filter(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=500, p=6, q=5, rho="0.7", seed=8)
        cfg = {
            "input": {"x_csv": str(x_csv), "y_csv": str(y_csv)},
            "filter": {"top_n": 3},
            "model": {"variant": "classical"},
            "seed": 2,
            "output_dir": str(tmp_path / "out"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert run_cli(["fit", "--config", cfg_path]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["data"]["p"] == 3 and report["data"]["q"] == 3
        selected = report["design"]["filter"]
        assert len(selected["left"]) == 3 and len(selected["right"]) == 3
        assert set(selected["left"]) <= {f"x{i}" for i in range(1, 7)}

    def test_degenerate_config_exits_4(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=50, p=60, q=5, rho="0.5", seed=1)
        cfg_path, _ = base_config(tmp_path, x_csv, y_csv)
        assert run_cli(["fit", "--config", cfg_path]) == 4

    def test_unknown_key_exits_2(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path)
        cfg_path, cfg = base_config(tmp_path, x_csv, y_csv)
        raw = json.loads(cfg_path.read_text())
        raw["mystery"] = 1
        cfg_path.write_text(json.dumps(raw))
        assert run_cli(["fit", "--config", cfg_path]) == 2

    def test_bad_data_exits_3(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n3,oops\n")
        y = tmp_path / "y.csv"
        y.write_text("c\n1\n2\n")
        cfg_path, _ = base_config(tmp_path, bad, y)
        assert run_cli(["fit", "--config", cfg_path]) == 3

    def test_scan_sparsity(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=500, p=6, q=6, rho="0.8", seed=2)
        cfg_path, _ = base_config(tmp_path, x_csv, y_csv,
                                  variant="sparse", c1=1.5, c2=1.5)
        assert run_cli(["scan-sparsity", "--config", cfg_path,
                        "--c1-grid", "1.2,2.0", "--c2-grid", "1.5"]) == 0
        lines = (tmp_path / "out" / "scan.csv").read_text().strip().splitlines()
        assert lines[0] == "c1,c2,train_r1,holdout_r1"
        assert len(lines) == 3

    def test_run_full_pipeline_with_reduction(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=600, p=8, q=6, rho="0.8,0.4", seed=9)
        cfg = {
            "input": {"x_csv": str(x_csv), "y_csv": str(y_csv)},
            "preprocess": {"winsorize": [1, 99]},
            "reduce": {"left": {"components": 5}, "right": None},
            "model": {"variant": "classical", "k": 3},
            "inference": {"n_perm": 99, "holdout_split": 0.75},
            "diagnostics": {"sensitivity": True, "side": "right"},
            "seed": 4,
            "output_dir": str(tmp_path / "out"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert run_cli(["run", "--config", cfg_path]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["data"]["left_columns"] == ["pc1", "pc2", "pc3", "pc4", "pc5"]
        assert report["design"]["reduction"]["left"] is not None
        assert report["inference"]["holdout"] is not None
        assert report["diagnostics"]["sensitivity"] is not None
        # loadings are reported against the pre-reduction variables
        loadings = (tmp_path / "out" / "loadings.csv").read_text()
        assert "x1" in loadings

    def test_missing_data_pipeline(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=200, p=4, q=3, seed=13)
        # knock holes into x.csv
        lines = x_csv.read_text().strip().splitlines()
        cells = lines[5].split(",")
        cells[1] = ""
        lines[5] = ",".join(cells)
        lines[10] = ",,,"
        x_csv.write_text("\n".join(lines) + "\n")
        cfg = {
            "input": {"x_csv": str(x_csv), "y_csv": str(y_csv)},
            "preprocess": {"impute": "median", "row_drop_fraction": 0.5},
            "model": {"variant": "classical"},
            "seed": 1,
            "output_dir": str(tmp_path / "out"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert run_cli(["fit", "--config", cfg_path]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["data"]["n_rows_used"] == 199  # all-missing row dropped
        assert report["design"]["imputation"]["strategy"] == "median"


class TestDeterminism:
    def test_byte_identical_reports(self, tmp_path):
        x_csv, y_csv = synth_files(tmp_path, n=300, p=4, q=4, rho="0.6", seed=21)
        cfg = {
            "input": {"x_csv": str(x_csv), "y_csv": str(y_csv)},
            "model": {"variant": "classical"},
            "inference": {"n_perm": 199},
            "seed": 33,
            "output_dir": str(tmp_path / "out"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        reports = []
        for _ in range(2):
            # a real subprocess each time: fresh interpreter state
            proc = subprocess.run(
                [sys.executable, "-m", "ccakit", "permute", "--config", str(cfg_path)],
                capture_output=True,
            )
            assert proc.returncode == 0, proc.stderr.decode()
            reports.append((tmp_path / "out" / "report.json").read_bytes())
        assert reports[0] == reports[1]

    def test_synth_deterministic(self, tmp_path):
        a = synth_files(tmp_path / "a", n=100, p=3, q=3, seed=5)
        b = synth_files(tmp_path / "b", n=100, p=3, q=3, seed=5)
        assert a[0].read_bytes() == b[0].read_bytes()
        assert a[1].read_bytes() == b[1].read_bytes()
