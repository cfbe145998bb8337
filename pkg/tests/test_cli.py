import json
import os

import numpy as np

from vrsplit.cli import main
from vrsplit.problems import load_instance


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestTheoryCommand:
    def test_step_size_anchor(self, capsys):
        code, out, _ = run_cli(capsys, "theory", "--method", "vfr",
                               "--gamma", "0.75", "--estimator", "svrg",
                               "--n", "10000", "--b", "464", "--p", "0.1",
                               "--L", "1")
        assert code == 0
        blob = json.loads(out)
        assert abs(blob["eta"] - 0.3038) <= 1e-3
        assert blob["method"] == "vfr" and blob["family"] == "svrg"

    def test_missing_batch_flag(self, capsys):
        code, _, err = run_cli(capsys, "theory", "--estimator", "svrg",
                               "--n", "100")
        assert code == 2
        assert "--b" in err

    def test_infeasible_kappa_reports_range(self, capsys):
        code, _, err = run_cli(capsys, "theory", "--estimator", "full",
                               "--n", "100", "--kappa", "5.0")
        assert code == 2
        assert "max admissible kappa" in err

    def test_unknown_flag_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, "theory", "--bogus", "1")
        assert code == 2


class TestRunCommand:
    def test_same_seed_identical_bytes(self, capsys, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        args = ["run", "--problem", "quadratic", "--n", "60",
                "--algorithm", "vfr-saga", "--seed", "3", "--epochs", "3"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        capsys.readouterr()
        assert out1.read_bytes() == out2.read_bytes()


class TestSweepAndReport:
    def test_sweep_then_report(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "sweep", "--problem", "quadratic",
                               "--n", "60", "--algorithms", "og,vfr-saga",
                               "--seeds", "0..2", "--epochs", "3",
                               "--out-dir", str(tmp_path))
        assert code == 0
        assert len(out.strip().splitlines()) == 2 * 4
        code, out, _ = run_cli(capsys, "report", "--dir", str(tmp_path))
        assert code == 0
        assert "vfr-saga" in out

    def test_sweep_needs_problem_or_config(self, capsys):
        code, _, err = run_cli(capsys, "sweep")
        assert code == 2


class TestVerifyCommand:
    def test_verify_json_passes(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--states", "2")
        assert code == 0
        blob = json.loads(out)
        assert blob["pass"] is True


class TestGenData:
    def test_writes_container(self, capsys, tmp_path):
        out = tmp_path / "inst.npz"
        code, _, _ = run_cli(capsys, "gen-data", "--problem", "wgan",
                             "--n", "30", "--seed", "5", "--out", str(out))
        assert code == 0
        meta, arrays = load_instance(out)
        assert meta["kind"] == "wgan" and meta["seed"] == 5
        assert "mats" in arrays and "x_star" in arrays
        assert np.isfinite(arrays["x0"]).all()


class TestEnvDefaultOutDir:
    def test_env_variable_respected(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("VRSPLIT_OUTDIR", str(tmp_path / "envout"))
        code, out, _ = run_cli(capsys, "sweep", "--problem", "quadratic",
                               "--n", "60", "--algorithms", "og",
                               "--seeds", "0", "--epochs", "2")
        assert code == 0
        assert os.path.isdir(str(tmp_path / "envout"))
