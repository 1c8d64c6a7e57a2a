import json

import numpy as np
import pytest

from spdc_werner.calibration import synthetic_calibration_points, write_calibration_csv
from spdc_werner.cli import main
from spdc_werner.fock import DensityMatrix
from spdc_werner.metrics import fidelity, werner_state


def run(argv):
    return main(argv)


class TestSweep:
    def test_csv_rows_and_determinism(self, tmp_path):
        out1 = tmp_path / "sweep1.csv"
        out2 = tmp_path / "sweep2.csv"
        argv = ["sweep", "--g", "0.1,1,0.3", "--eta", "0.01"]
        assert run(argv + ["--out", str(out1)]) == 0
        assert run(argv + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().strip().splitlines()
        assert lines[0] == "g,eta,p_theory,p_series,tangle,linear_entropy,witness"
        assert len(lines) == 4
        for line in lines[1:]:
            fields = [float(x) for x in line.split(",")]
            assert fields[2] == pytest.approx(fields[3], abs=1e-8)

    def test_json_format(self, tmp_path):
        out = tmp_path / "sweep.json"
        assert run(["sweep", "--g", "0.5", "--eta", "0.02",
                    "--format", "json", "--out", str(out)]) == 0
        rows = json.loads(out.read_text())
        assert len(rows) == 1
        assert rows[0]["p_theory"] == pytest.approx(rows[0]["p_series"], abs=1e-8)

    def test_empty_grid_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            run(["sweep", "--g", "", "--eta", "0.01"])
        assert err.value.code == 2

    def test_failing_row_continues_and_flags(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        # g=0 row fails (no pairs); the other row must still be produced
        assert run(["sweep", "--g", "0,0.5", "--eta", "0.01",
                    "--out", str(out)]) == 1
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 2
        assert "error" in capsys.readouterr().err


class TestMatrix:
    def test_schema_and_content(self, tmp_path):
        out = tmp_path / "rho.json"
        assert run(["matrix", "--g", "1.313", "--eta", "0.016",
                    "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["dim"] == 4
        assert payload["basis"] == ["HH", "HV", "VH", "VV"]
        dm = DensityMatrix.from_dict(payload)
        assert dm.trace == pytest.approx(1.0, abs=1e-12)

    def test_outdir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SPDC_WERNER_OUTDIR", str(tmp_path))
        assert run(["matrix", "--g", "0.5", "--eta", "0.01",
                    "--out", "nested/rho.json"]) == 0
        assert (tmp_path / "nested" / "rho.json").exists()


class TestOracleCheck:
    def test_default_grid_passes(self, capsys):
        assert run(["oracle-check"]) == 0
        out = capsys.readouterr().out
        assert "worst deviation" in out
        assert "FAIL" not in out

    def test_capacity_error(self, capsys):
        assert run(["oracle-check", "--n", "5"]) == 1
        assert "capacity" in capsys.readouterr().err.lower()

    def test_near_lossless_still_passes(self):
        assert run(["oracle-check", "--n", "2", "--eta", "0.9999"]) == 0


class TestTomo:
    def test_simulate_then_reconstruct(self, tmp_path):
        counts = tmp_path / "counts.csv"
        assert run([
            "tomo", "simulate", "--g", "1.313", "--eta", "0.016",
            "--counts-per-setting", "20000", "--seed", "7",
            "--out", str(counts),
        ]) == 0
        report_path = tmp_path / "report.json"
        assert run([
            "tomo", "reconstruct", "--input", str(counts),
            "--counts-per-setting", "20000",
            "--g", "1.313", "--eta", "0.016",
            "--out", str(report_path),
        ]) == 0
        report = json.loads(report_path.read_text())
        assert report["metrics"]["fidelity_vs_theory"] >= 0.995
        assert report["iterations"] > 0
        state = DensityMatrix.from_dict(report["state"])
        assert state.trace == pytest.approx(1.0, abs=1e-10)

    def test_simulate_deterministic(self, tmp_path):
        args = ["tomo", "simulate", "--g", "0.5", "--eta", "0.01",
                "--counts-per-setting", "1000", "--seed", "3"]
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert run(args + ["--out", str(a)]) == 0
        assert run(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_reconstruct_missing_file(self, tmp_path, capsys):
        assert run(["tomo", "reconstruct",
                    "--input", str(tmp_path / "nope.csv")]) == 1
        assert "error" in capsys.readouterr().err

    def test_reconstruct_singlet_noiseless(self, tmp_path):
        # counts proportional to exact singlet probabilities
        from spdc_werner.tomography import (
            CountRecord, standard_tomography_settings, born_probability,
            write_count_records,
        )
        singlet = werner_state(1.0)
        total = 10**6
        records = [
            CountRecord(setting=s, counts=round(total * born_probability(singlet, s)))
            for s in standard_tomography_settings()
        ]
        counts = tmp_path / "counts.csv"
        write_count_records(records, counts)
        report_path = tmp_path / "report.json"
        assert run(["tomo", "reconstruct", "--input", str(counts),
                    "--counts-per-setting", str(total),
                    "--out", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert report["metrics"]["p"] == pytest.approx(1.0, abs=1e-3)


class TestFit:
    def test_bundled_style_dataset(self, tmp_path):
        points = synthetic_calibration_points(
            1.313, {1: 0.016, 2: 0.014}, 250000.0,
            np.linspace(0.05, 1.0, 12), noise_fraction=0.01, seed=20260809,
        )
        csv_path = tmp_path / "calib.csv"
        write_calibration_csv(points, csv_path)
        out = tmp_path / "fit.json"
        assert run(["fit", "--input", str(csv_path), "--rate", "250000",
                    "--out", str(out)]) == 0
        fit = json.loads(out.read_text())
        assert abs(fit["g_max"] - 1.313) / 1.313 < 0.02
        assert fit["etas"]["1"] == pytest.approx(0.016, rel=0.2)

    def test_repository_demo_dataset(self, tmp_path):
        from pathlib import Path
        demo = Path(__file__).resolve().parents[1] / "data" / "calibration_demo.csv"
        out = tmp_path / "fit.json"
        assert run(["fit", "--input", str(demo), "--rate", "250000",
                    "--out", str(out)]) == 0
        fit = json.loads(out.read_text())
        assert abs(fit["g_max"] - 1.313) / 1.313 < 0.02

    def test_insufficient_points(self, tmp_path, capsys):
        points = synthetic_calibration_points(
            1.313, {1: 0.016}, 250000.0, [0.5, 1.0]
        )
        csv_path = tmp_path / "calib.csv"
        write_calibration_csv(points, csv_path)
        assert run(["fit", "--input", str(csv_path), "--rate", "250000"]) == 1
        assert "error" in capsys.readouterr().err
