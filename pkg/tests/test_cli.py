import json
import math

import numpy as np
import pytest

from tsui.cli import main, parse_span
from tsui.fitting import NoiseDataset, load_noise_csv
from tsui.metrology import joint_variance_quadratic


def read_csv(path):
    lines = [
        line
        for line in path.read_text().splitlines()
        if line and not line.startswith("#")
    ]
    header = lines[0].split(",")
    rows = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return header, rows


def write_scan_csv(path, gain, eta_p, eta_c, n=21):
    lam = np.linspace(0.0, 1.0, n)
    vp, vc, cr = joint_variance_quadratic(gain, eta_p, eta_c)
    db = 10.0 * np.log10(vp + lam**2 * vc + 2.0 * lam * cr)
    NoiseDataset(lam=lam, noise_db=db, sigma_db=np.full(n, 0.05)).to_csv(str(path))


class TestParseSpan:
    def test_grid_includes_endpoint(self):
        grid = parse_span("1:5:0.1")
        assert grid.size == 41
        assert grid[0] == 1.0
        assert math.isclose(grid[-1], 5.0, abs_tol=1e-12)
        assert parse_span("0:1:0.05").size == 21

    def test_comma_list_and_scalar(self):
        assert np.allclose(parse_span("0,0.5,1"), [0.0, 0.5, 1.0])
        assert np.allclose(parse_span("0.3"), [0.3])

    def test_bad_spans_rejected(self):
        for text in ("5:1:0.1", "1:2:0", "1:2:-0.5", "a:b:c", "1:2:0.1:9", ""):
            with pytest.raises(ValueError):
                parse_span(text)


class TestCurves:
    def test_fig4b_lossless_row(self, tmp_path):
        out = tmp_path / "w.csv"
        code = main(
            ["curves", "fig4b", "--eta", "1.0", "--gain", "1:5:0.1", "--out", str(out)]
        )
        assert code == 0
        header, rows = read_csv(out)
        assert header[0] == "gain"
        assert rows.shape == (41, 2)
        idx = int(np.argmin(np.abs(rows[:, 0] - 2.0)))
        assert rows[idx, 0] == 2.0
        # Full-precision serialization: the stored weight round-trips.
        assert rows[idx, 1] == 0.9428090415820631
        assert rows[0, 1] == 0.0

    def test_fig4b_default_etas(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["curves", "fig4b"]) == 0
        header, rows = read_csv(tmp_path / "fig4b.csv")
        assert len(header) == 4
        assert rows.shape[0] == 81

    def test_fig6_low_gain_crossover(self, tmp_path):
        out = tmp_path / "snri.csv"
        assert main(["curves", "fig6", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ["lambda", "snri_sql2_G1.1", "snri_sql1_G1.1"]
        assert rows.shape[0] == 101
        balanced = rows[-1]
        assert math.isclose(balanced[0], 1.0, abs_tol=1e-12)
        assert math.isclose(balanced[1], -0.3075, abs_tol=1e-3)
        assert balanced[1] < 0.0 < balanced[2]
        assert np.min(rows[:, 1]) < -0.75

    def test_fig3_coherent_limit_row(self, tmp_path):
        out = tmp_path / "sens.csv"
        assert main(["curves", "fig3", "--gain", "1:2:0.5", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == [
            "gain",
            "alpha_dphi_balanced",
            "alpha_dphi_optimal",
            "alpha_dphi_qcrb",
        ]
        g1 = rows[0]
        assert math.isclose(g1[1], math.sqrt(2.0) / 2.0, rel_tol=1e-12)
        assert math.isclose(g1[2], 0.5, rel_tol=1e-12)
        assert math.isclose(g1[3], 0.5, rel_tol=1e-9)

    def test_fig4a_json_output(self, tmp_path):
        out = tmp_path / "noise.json"
        code = main(
            ["curves", "fig4a", "--gain", "2.0", "--format", "json", "--out", str(out)]
        )
        assert code == 0
        data = json.loads(out.read_text())
        assert data["columns"] == ["lambda", "variance", "noise_db"]
        assert len(data["rows"]) == 101
        assert math.isclose(data["meta"]["lambda_opt"], 0.9428090415820631, rel_tol=1e-12)

    def test_fig4a_rejects_multiple_etas(self, tmp_path):
        out = tmp_path / "x.csv"
        code = main(
            ["curves", "fig4a", "--eta", "1.0", "--eta", "0.9", "--out", str(out)]
        )
        assert code == 2
        assert not out.exists()

    def test_bad_grid_exits_2(self, tmp_path):
        out = tmp_path / "x.csv"
        assert main(["curves", "fig4b", "--gain", "5:1:0.1", "--out", str(out)]) == 2
        assert not out.exists()

    def test_unknown_figure_exits_2(self, capsys):
        assert main(["curves", "fig9"]) == 2

    def test_missing_output_dir_leaves_no_file(self, tmp_path):
        out = tmp_path / "missing" / "x.csv"
        assert main(["curves", "fig4b", "--out", str(out)]) == 2
        assert not out.exists()
        assert not out.parent.exists()


class TestLambdaOpt:
    def test_prints_full_precision(self, capsys):
        code = main(
            ["lambda-opt", "--gain", "1.67", "--eta-p", "0.76", "--eta-c", "0.79"]
        )
        assert code == 0
        line = capsys.readouterr().out.splitlines()[0]
        assert float(line) == 0.7962950314799236

    def test_no_gain_no_weight(self, capsys):
        assert main(["lambda-opt", "--gain", "1.0"]) == 0
        assert float(capsys.readouterr().out.splitlines()[0]) == 0.0

    def test_numeric_check_line(self, capsys):
        assert main(["lambda-opt", "--gain", "2.0", "--numeric"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert float(out[0]) == 0.9428090415820631
        assert out[1].startswith("numeric check:")

    def test_unphysical_gain_exits_2(self, capsys):
        assert main(["lambda-opt", "--gain", "0.9"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_required_flag(self, capsys):
        assert main(["lambda-opt"]) == 2


class TestSimulate:
    def test_scan_written_and_loadable(self, tmp_path):
        cfg = tmp_path / "sim.cfg"
        cfg.write_text(
            "gain = 1.67\neta_p = 0.76\neta_c = 0.79\n"
            "duration = 0.004\nrng_seed = 3\n"
        )
        out = tmp_path / "scan.csv"
        code = main(
            [
                "simulate",
                "--config",
                str(cfg),
                "--lambdas",
                "0:1:0.25",
                "--trials",
                "1",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        ds = load_noise_csv(str(out))
        assert len(ds) == 5
        assert ds.source == "simulated"
        assert np.all(ds.sigma_db > 0.0)

    def test_missing_config_exits_2(self, tmp_path):
        out = tmp_path / "scan.csv"
        code = main(
            ["simulate", "--config", str(tmp_path / "nope.cfg"), "--out", str(out)]
        )
        assert code == 2
        assert not out.exists()


class TestFit:
    def test_fit_with_overlays(self, tmp_path, capsys):
        data = tmp_path / "scan.csv"
        write_scan_csv(data, 1.67, 0.76, 0.79)
        out = tmp_path / "fit.json"
        prefix = tmp_path / "overlay"
        code = main(
            [
                "fit",
                "--data",
                str(data),
                "--out",
                str(out),
                "--overlay",
                str(prefix),
            ]
        )
        assert code == 0
        result = json.loads(out.read_text())
        assert abs(result["gain"] - 1.67) < 1e-3
        assert abs(result["eta_c"] - 0.79) < 1e-3
        assert abs(result["lambda_opt_fit"] - 0.7962950314799236) < 1e-4
        stdout = capsys.readouterr().out
        assert "lambda_opt estimate" in stdout
        for kind in ("sql2", "sql1"):
            path = tmp_path / f"overlay_{kind}.csv"
            assert path.exists()
            header, rows = read_csv(path)
            assert header == ["lambda", "snri_db"]
            assert rows.shape[0] == 101

    def test_unconstrained_flag(self, tmp_path):
        data = tmp_path / "scan.csv"
        write_scan_csv(data, 1.2, 0.73, 0.76)
        out = tmp_path / "fit.json"
        code = main(["fit", "--data", str(data), "--out", str(out), "--unconstrained"])
        assert code == 0
        result = json.loads(out.read_text())
        assert result["loss_offset"] is None
        assert result["condition_number"] > 1e10

    def test_bad_initial_exits_2(self, tmp_path):
        data = tmp_path / "scan.csv"
        write_scan_csv(data, 1.67, 0.76, 0.79)
        code = main(
            ["fit", "--data", str(data), "--out", str(tmp_path / "f.json"),
             "--initial", "1.5,0.8"]
        )
        assert code == 2

    def test_missing_data_file_exits_2(self, tmp_path):
        code = main(
            ["fit", "--data", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "f.json")]
        )
        assert code == 2


class TestVerify:
    def test_default_run_passes(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "verification PASSED" in out
        assert "FAIL" not in out

    def test_lossless_bright_seed(self, capsys):
        code = main(
            ["verify", "--gain", "1.5", "--alpha", "0.8", "--eta", "1.0",
             "--cutoff", "40", "--lambdas", "0,1"]
        )
        assert code == 0
        assert "verification PASSED" in capsys.readouterr().out

    def test_tight_cutoff_exits_1(self, capsys):
        assert main(["verify", "--cutoff", "12", "--gain", "2.0"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_eta_exits_2(self):
        assert main(["verify", "--eta", "1.2"]) == 2


class TestParser:
    def test_no_command_exits_2(self):
        assert main([]) == 2

    def test_unknown_command_exits_2(self):
        assert main(["frobnicate"]) == 2
