import json
import os

import numpy as np
import pytest

from vfpbif.cli import main
from vfpbif.reporting import json17


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _manifest(out_dir):
    names = [f for f in os.listdir(out_dir) if f.startswith("manifest_")]
    assert len(names) == 1
    return _read_json(os.path.join(out_dir, names[0]))


class TestJn:
    def test_round_value(self, tmp_path, capsys):
        code = main(["jn", "--n", "1", "--y", "1", "--mu", "0",
                     "--out", str(tmp_path)])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["value_if_representable"] == pytest.approx(1.0, rel=1e-10)

    def test_gamma_lambda_form(self, tmp_path, capsys):
        code = main(["jn", "--n", "0", "--gamma", "0.5", "--lambda", "0.1",
                     "--out", str(tmp_path)])
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["y"] == pytest.approx(2.0)
        assert out["mu"] == pytest.approx(-0.2)

    def test_domain_error_exit_code(self, tmp_path):
        assert main(["jn", "--n", "0", "--y", "1", "--mu", "5",
                     "--out", str(tmp_path)]) == 2


class TestDispersion:
    def test_invert_solve_round_trip(self, tmp_path, capsys):
        assert main(["dispersion", "invert", "--gamma", "0.1",
                     "--lambda", "0.05", "--out", str(tmp_path / "a")]) == 0
        c = json.loads(capsys.readouterr().out)["c"]
        assert main(["dispersion", "solve", "--c", repr(c), "--gamma", "0.1",
                     "--bracket", "1e-6", "0.5",
                     "--out", str(tmp_path / "b")]) == 0
        root = json.loads(capsys.readouterr().out)
        assert root["lam"] == pytest.approx(0.05, abs=1e-10)

    def test_stable_case_exit_2(self, tmp_path):
        c = 0.9 * 2.0 * np.pi
        assert main(["dispersion", "solve", "--c", str(c), "--gamma", "1e-6",
                     "--bracket", "0", "0.1", "--out", str(tmp_path)]) == 2

    def test_scan_constant_at_zero_coupling(self, tmp_path):
        out = tmp_path / "scan"
        assert main(["dispersion", "scan", "--c", "0", "--gamma", "0.2",
                     "--lambda-grid", "0.01", "0.1", "5",
                     "--out", str(out), "--no-plot"]) == 0
        csvs = [f for f in os.listdir(out) if f.endswith(".csv")]
        rows = open(os.path.join(out, csvs[0])).read().splitlines()
        assert rows[0] == "lambda,Lambda_value"
        assert all(line.split(",")[1] == "1" for line in rows[1:])

    def test_scan_writes_figure(self, tmp_path):
        out = tmp_path / "scan"
        assert main(["dispersion", "scan", "--c", "5", "--gamma", "0.2",
                     "--lambda-grid", "0.01", "0.1", "4",
                     "--out", str(out)]) == 0
        assert any(f.endswith(".png") for f in os.listdir(out))


class TestC3:
    def test_compute_prints_breakdown(self, tmp_path, capsys):
        assert main(["c3", "compute", "--gamma", "0.3", "--lambda", "0.02",
                     "--out", str(tmp_path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["c3_re"] == pytest.approx(
            out["c3_1_re"] + out["c3_2_re"] + out["c3_3_re"], rel=1e-12
        )
        assert out["regime"] in ("I", "II", "III", "boundary")

    def test_zero_coupling_degenerate(self, tmp_path):
        assert main(["c3", "compute", "--gamma", "0.3", "--c", "0",
                     "--out", str(tmp_path)]) == 2

    def test_sweep_outputs(self, tmp_path):
        out = tmp_path / "sweep"
        os.environ["VFP_NUM_THREADS"] = "1"
        try:
            assert main(["c3", "sweep", "--gamma", "0.3",
                         "--lambda-grid", "1e-3", "1e-2", "4",
                         "--out", str(out), "--no-plot"]) == 0
        finally:
            del os.environ["VFP_NUM_THREADS"]
        csvs = [f for f in os.listdir(out) if f.endswith(".csv")]
        lines = open(os.path.join(out, csvs[0])).read().splitlines()
        assert lines[0].startswith("gamma,lambda,c,c3_1,c3_2,c3_3,c3,c5_partial,regime")
        assert len(lines) == 5
        slopes = [f for f in os.listdir(out) if "slopes" in f]
        assert slopes
        m = _manifest(out)
        assert m["command"] == "c3-sweep"


class TestSimulate:
    def test_subthreshold_exit_5(self, tmp_path):
        out = tmp_path / "sub"
        code = main(["simulate", "--gamma", "0.4", "--c", str(0.9 * 2 * np.pi),
                     "--K", "3", "--N", "48", "--t-end", "30",
                     "--eps0", "1e-4", "--record-every", "4",
                     "--out", str(out), "--no-plot"])
        assert code == 5
        rep = [f for f in os.listdir(out) if f.startswith("report_")]
        assert rep
        data = _read_json(os.path.join(out, rep[0]))
        assert data["exit_code"] == 5

    def test_saturating_run_writes_artifacts(self, tmp_path):
        out = tmp_path / "sat"
        code = main(["simulate", "--gamma", "0.3", "--lambda", "0.06",
                     "--K", "4", "--t-end", "300", "--record-every", "8",
                     "--out", str(out)])
        assert code == 0
        files = os.listdir(out)
        assert any(f.startswith("timeseries_") and f.endswith(".csv")
                   for f in files)
        assert any(f.endswith(".png") for f in files)
        csv = [f for f in files if f.endswith(".csv")][0]
        header = open(os.path.join(out, csv)).readline().strip()
        assert header == "t,re_phi1,im_phi1,abs_phi1,abs_phi2,tail_ratio"
        rep = [f for f in files if f.startswith("report_")][0]
        data = _read_json(os.path.join(out, rep))
        assert data["A_sat"] > 0
        assert data["fitted_growth_rate"] == pytest.approx(0.06, rel=0.05)

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "gamma": 0.4, "c": 0.9 * 2 * np.pi, "K": 3, "N": 48,
            "t_end": 500.0, "eps0": 1e-4, "record_every": 4,
        }))
        out = tmp_path / "run"
        code = main(["simulate", "--config", str(cfg), "--t-end", "20",
                     "--out", str(out), "--no-plot"])
        assert code == 5
        m = _manifest(out)
        assert m["parameters"]["t_end"] == 20.0


class TestMellinAndRegimes:
    def test_mellin_alpha_half(self, tmp_path, capsys):
        out = tmp_path / "mellin"
        code = main(["mellin", "check", "--alpha", "0.5",
                     "--lambda-grid", "0.003", "0.03", "4",
                     "--tol", "1e-9", "--out", str(out), "--no-plot"])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["prediction"] == pytest.approx(4.0)
        assert summary["relative_deviation"] < 0.02
        csv = [f for f in os.listdir(out) if f.endswith(".csv")][0]
        header = open(os.path.join(out, csv)).readline().strip()
        assert header == "lambda,phi_plus,phi_minus,scaled_plus,prediction"

    def test_regimes_map(self, tmp_path):
        out = tmp_path / "rm"
        code = main(["regimes", "map", "--gamma-grid", "1e-8", "1", "4",
                     "--lambda-grid", "1e-4", "0.3", "4", "--out", str(out)])
        assert code == 0
        assert any(f.endswith(".png") for f in os.listdir(out))


class TestReproducibility:
    def test_identical_configs_identical_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert main(["c3", "compute", "--gamma", "0.3",
                         "--lambda", "0.02", "--out", str(out)]) == 0
        ma, mb = _manifest(a), _manifest(b)
        assert ma["config_hash"] == mb["config_hash"]
        fa = [f for f in os.listdir(a) if f.startswith("c3_")][0]
        fb = [f for f in os.listdir(b) if f.startswith("c3_")][0]
        assert open(a / fa, "rb").read() == open(b / fb, "rb").read()

    def test_json17_fixed_width_floats(self):
        s = json17({"x": 1.0 / 3.0})
        assert "0.33333333333333331" in s


class TestOracleValuesThroughCli:
    def test_jn_matches_frozen_oracle(self, tmp_path, capsys):
        from _oracles import LN_J3_10_M5

        assert main(["jn", "--n", "3", "--y", "10", "--mu", "-5",
                     "--out", str(tmp_path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["log_value"] == pytest.approx(LN_J3_10_M5, abs=1e-10)

    def test_mellin_budget_exit_3(self, tmp_path):
        code = main(["mellin", "check", "--alpha", "0.5",
                     "--lambda-grid", "1e-6", "1e-5", "2",
                     "--out", str(tmp_path), "--no-plot"])
        assert code == 3

    def test_c3_compute_c_only(self, tmp_path, capsys):
        assert main(["c3", "compute", "--gamma", "0.2", "--c", "7.0",
                     "--out", str(tmp_path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["c3_re"] < 0.0
        assert out["lam"] > 0.0
