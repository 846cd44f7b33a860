import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from mspulse import cli
from mspulse.optimize import SolverError
from mspulse.phase_space import shoelace_area
from mspulse.pulsefile import read_pulse_file


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def summary(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines())


def table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


@pytest.fixture(scope="module")
def pulse_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "k3.json"
    assert cli.main(["optimize", "--loops", "3", "--rabi-max-hz", "1180", "--out", str(path)]) == 0
    return path


class TestOptimize:
    def test_summary(self, capsys, tmp_path):
        code, out, _ = run(["optimize", "--loops", "3", "--rabi-max-hz", "1180", "--out", str(tmp_path / "p.json")], capsys)
        assert code == 0
        s = summary(out)
        assert float(s["tau_us"]) == pytest.approx(1000.4, rel=0.05)
        assert float(s["delta_over_2pi_khz"]) == pytest.approx(2.998, rel=0.01)
        assert float(s["peak_rabi_khz"]) == pytest.approx(1.18, rel=1e-12)
        assert 0.65 <= float(s["energy_ratio"]) <= 0.85
        for key in ("energy_rad2_per_s", "lambda_max", "orientation", "square_energy_rad2_per_s"):
            assert key in s
        pf = read_pulse_file(tmp_path / "p.json")
        assert pf.loops == 3 and pf.n == 256
        assert pf.provenance["solver"]["rabi_max_hz"] == 1180.0

    def test_scaling_law(self, capsys):
        _, a, _ = run(["optimize", "--loops", "3", "--rabi-max-hz", "1180"], capsys)
        _, b, _ = run(["optimize", "--loops", "3", "--rabi-max-hz", "2360"], capsys)
        assert float(summary(b)["tau_us"]) == pytest.approx(float(summary(a)["tau_us"]) / 2, rel=1e-14)

    @pytest.mark.parametrize(
        "argv",
        [
            ["optimize", "--loops", "0", "--rabi-max-hz", "1180"],
            ["optimize", "--loops", "3", "--rabi-max-hz", "-5"],
            ["optimize", "--loops", "3", "--rabi-max-hz", "1180", "--n", "10"],
            ["optimize", "--loops", "three", "--rabi-max-hz", "1180"],
            ["optimize", "--rabi-max-hz", "1180"],
            [],
            ["frobnicate"],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        code, out, err = run(argv, capsys)
        assert code == 2
        assert out == ""
        assert "error" in err

    def test_solver_failure(self, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise SolverError("reduced energy form is not positive definite")

        monkeypatch.setattr(cli, "solve_gate_parameters", boom)
        code, _, err = run(["optimize", "--loops", "3", "--rabi-max-hz", "1180"], capsys)
        assert code == 3
        assert "solver failure" in err

    def test_unwritable_output(self, capsys, tmp_path):
        code, _, err = run(
            ["optimize", "--loops", "3", "--rabi-max-hz", "1180", "--out", str(tmp_path / "no" / "p.json")], capsys
        )
        assert code == 4
        assert "I/O error" in err


class TestSweep:
    def test_negative_range(self, pulse_path, capsys):
        code, out, _ = run(["sweep", "--pulse", str(pulse_path), "--offsets-hz", "-20:20:5"], capsys)
        assert code == 0
        header, rows = table(out)
        assert header == ["offset_hz", "closure_residual", "area", "fidelity"]
        assert [r[0] for r in rows] == [-20, -15, -10, -5, 0, 5, 10, 15, 20]
        res = [r[1] for r in rows]
        assert int(np.argmin(res)) == 4
        assert rows[4][3] == pytest.approx(1.0, abs=1e-9)

    def test_square_grows_linearly(self, pulse_path, capsys):
        tau_us = read_pulse_file(pulse_path).tau_s * 1e6
        _, out, _ = run(["sweep", "--square", "--loops", "3", "--tau-us", repr(tau_us), "--offsets-hz", "1:2:1"], capsys)
        sq = [r[1] for r in table(out)[1]]
        _, out, _ = run(["sweep", "--pulse", str(pulse_path), "--offsets-hz", "1:2:1"], capsys)
        opt = [r[1] for r in table(out)[1]]
        assert sq[1] / sq[0] == pytest.approx(2.0, abs=0.2)
        assert opt[1] / opt[0] == pytest.approx(4.0, abs=0.8)

    def test_chirp_lowers_fidelity(self, pulse_path, capsys, tmp_path):
        out_csv = tmp_path / "s.csv"
        code, out, _ = run(
            ["sweep", "--pulse", str(pulse_path), "--offsets-hz", "0:0:1", "--chirp-hz-per-us", "0.3", "--out", str(out_csv)],
            capsys,
        )
        assert code == 0 and out == ""
        (row,) = table(out_csv.read_text())[1]
        assert 0.99 < row[3] < 1.0 - 1e-4

    def test_threads_do_not_change_output(self, pulse_path, capsys, monkeypatch):
        argv = ["sweep", "--pulse", str(pulse_path), "--offsets-hz", "-10:10:2.5"]
        _, serial, _ = run(argv, capsys)
        monkeypatch.setenv(cli.WORKERS_ENV, "4")
        _, parallel, _ = run(argv, capsys)
        assert serial == parallel

    @pytest.mark.parametrize(
        "argv",
        [
            ["sweep", "--offsets-hz", "0:1:1"],
            ["sweep", "--square", "--loops", "3", "--offsets-hz", "0:1:1"],
            ["sweep", "--square", "--loops", "3", "--tau-us", "1000", "--offsets-hz", "0:1"],
            ["sweep", "--square", "--loops", "3", "--tau-us", "1000", "--offsets-hz", "5:1:1"],
            ["sweep", "--square", "--loops", "3", "--tau-us", "1000", "--offsets-hz", "0:1:1", "--nbar", "-1"],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        assert run(argv, capsys)[0] == 2

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(["sweep", "--pulse", str(tmp_path / "none.json"), "--offsets-hz", "0:1:1"], capsys)
        assert code == 4

    def test_corrupt_file(self, capsys, tmp_path, pulse_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert run(["sweep", "--pulse", str(bad), "--offsets-hz", "0:1:1"], capsys)[0] == 4
        # parses but violates delta * tau = 2 pi K
        text = pulse_path.read_text().replace('"loops": 3', '"loops": 4')
        bad.write_text(text)
        assert run(["sweep", "--pulse", str(bad), "--offsets-hz", "0:1:1"], capsys)[0] == 4


class TestCompare:
    def test_table(self, capsys):
        code, out, _ = run(["compare"], capsys)
        assert code == 0
        header, rows = table(out)
        assert header == [
            "K", "delta_tau_over_pi", "tau_us", "E_square", "E_optimized", "ratio",
            "E_square_normalized", "E_optimized_normalized",
        ]
        assert len(rows) == 5
        assert [r[0] for r in rows] == [3, 5, 9, 12, 18]
        np.testing.assert_allclose([r[1] for r in rows], [6, 10, 18, 24, 36], rtol=1e-12)
        norm = np.array([[r[6], r[7]] for r in rows])
        assert norm.max() == 1.0
        assert rows[-1][6] == 1.0
        for r in rows:
            assert r[5] == pytest.approx(0.75, abs=0.10)
            assert r[5] == pytest.approx(r[4] / r[3], rel=1e-12)

    def test_bad_list(self, capsys):
        assert run(["compare", "--loops-list", "3,x"], capsys)[0] == 2
        assert run(["compare", "--loops-list", "0,3"], capsys)[0] == 2


class TestTrajectory:
    def test_columns(self, pulse_path, capsys):
        code, out, _ = run(["trajectory", "--pulse", str(pulse_path)], capsys)
        assert code == 0
        header, rows = table(out)
        assert header == ["t_us", "omega_hz", "q", "p"]
        data = np.array(rows)
        assert data[0, 2] == 0.0 and data[0, 3] == 0.0
        assert data[0, 1] == 0.0 and data[-1, 1] == 0.0
        assert abs(data[:, 1]).max() == pytest.approx(1180.0, rel=1e-12)

        class Path:
            q = data[:, 2]
            p = data[:, 3]

        assert abs(shoelace_area(Path)) == pytest.approx(math.pi / 2, rel=1e-5)

    def test_bad_samples(self, pulse_path, capsys):
        assert run(["trajectory", "--pulse", str(pulse_path), "--samples-per-segment", "0"], capsys)[0] == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "mspulse", "optimize", "--loops", "0", "--rabi-max-hz", "1"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    proc = subprocess.run([sys.executable, "-m", "mspulse", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()
