import csv
import io
import json
import math
import subprocess
import sys
import time

import pytest

from modebell.analytic import TSIRELSON, biased_reference_scan, boundary_analytic
from modebell.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


class TestChsh:
    def test_symmetric_optimal(self, capsys):
        data = run_json(capsys, "chsh", "--alpha-sq", "0.5", "--gamma", "0", "--angles", "optimal")
        assert data["C"] == pytest.approx(TSIRELSON, abs=1e-9)
        assert len(data["E"]) == 4
        assert set(data["settings"]) >= {"thetaA1", "thetaA2", "thetaB1", "thetaB2"}

    def test_empty_mode(self, capsys):
        assert run_json(capsys, "chsh", "--alpha-sq", "1.0")["C"] == pytest.approx(0.0, abs=1e-12)

    def test_optimal_search_matches_biased_scan(self, capsys):
        data = run_json(capsys, "chsh", "--alpha-sq", "0.5", "--qsq", "0.4", "--angles", "optimal-search")
        assert data["C"] == pytest.approx(biased_reference_scan([0.4])[0].C, abs=1e-9)

    def test_explicit_angles(self, capsys):
        data = run_json(capsys, "chsh", "--angles", "0,1.5707963267948966,0.7853981633974483,-0.7853981633974483")
        assert data["C"] == pytest.approx(TSIRELSON, abs=1e-9)

    @pytest.mark.parametrize(
        "argv",
        [
            ["chsh", "--alpha-sq", "1.5"],
            ["chsh", "--angles", "1,2,3"],
            ["chsh", "--angles", "a,b,c,d"],
            ["chsh", "--qsq", "-0.1"],
            ["chsh", "--transmittivity", "2"],
            ["chsh", "--format", "csv"],
            ["chsh", "--bogus"],
            ["nonsense"],
            [],
        ],
    )
    def test_validation_exit(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 2
        assert out == ""
        assert err.startswith("error:") and err.count("\n") == 1


class TestScan:
    def test_default_grid(self, capsys, tmp_path):
        path = tmp_path / "scan.csv"
        assert main(["scan", "--output", str(path)]) == 0
        text = path.read_text()
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == 101 * 181
        assert text.startswith("p,d,C\n") and text.endswith("\n")
        p0 = [float(r["C"]) for r in rows if float(r["p"]) == 0.0]
        assert max(p0) == pytest.approx(TSIRELSON, abs=1e-9)
        half = [float(r["C"]) for r in rows if float(r["p"]) == 0.5]
        assert len(half) == 181 and max(half) <= 2 + 1e-9
        # ordered by p, then d
        keys = [(float(r["p"]), float(r["d"])) for r in rows]
        assert keys == sorted(keys)

        again = tmp_path / "again.csv"
        main(["scan", "--output", str(again)])
        assert path.read_bytes() == again.read_bytes()

    def test_json_schema(self, capsys):
        data = run_json(capsys, "scan", "--p-points", "3", "--d-points", "4", "--format", "json")
        assert data["columns"] == ["p", "d", "C"]
        assert len(data["rows"]) == 12

    @pytest.mark.parametrize("flag", ["--p-points", "--d-points"])
    def test_invalid_grid(self, capsys, flag):
        assert run(capsys, "scan", flag, "1")[0] == 2


class TestBoundary:
    def test_default(self, capsys):
        data = run_json(capsys, "boundary")
        assert abs(data["p_star"] - 0.146447) < 1e-6
        assert data["p_star"] == pytest.approx(boundary_analytic(), abs=1e-9)
        assert data["p_star_upper"] == pytest.approx(1 - data["p_star"], abs=0)

    def test_tight_tolerance(self, capsys):
        loose = run_json(capsys, "boundary")["p_star"]
        tight = run_json(capsys, "boundary", "--tol", "1e-9")["p_star"]
        assert f"{loose:.6f}" == f"{tight:.6f}"

    def test_bad_tol(self, capsys):
        assert run(capsys, "boundary", "--tol", "0")[0] == 2


class TestShots:
    def test_seeded_run(self, capsys):
        argv = ("shots", "--shots", "1000000", "--seed", "42", "--angles", "optimal")
        code, out1, _ = run(capsys, *argv)
        assert code == 0
        data = json.loads(out1)
        assert data["seed"] == 42
        assert abs(data["C_hat"] - TSIRELSON) < 3 * data["stderr"]["C"]
        _, out2, _ = run(capsys, *argv)
        assert out1 == out2

    def test_too_few_shots(self, capsys):
        assert run(capsys, "shots", "--shots", "50")[0] == 2

    def test_all_rejected_exit_3(self, capsys):
        # both references empty and the system in a one-sided state: nothing ever selects
        code, out, err = run(capsys, "shots", "--alpha-sq", "1", "--qsq", "1", "--qsq-b", "1", "--shots", "100")
        assert code == 3
        assert err.startswith("error:")


class TestOthers:
    def test_horodecki(self, capsys):
        data = run_json(capsys, "horodecki", "--p", "0.5")
        assert data["horodecki_max_chsh"] == pytest.approx(2.0, abs=1e-12)
        assert run_json(capsys, "horodecki", "--p", "0")["horodecki_max_chsh"] == pytest.approx(TSIRELSON)

    def test_separable(self, capsys):
        data = run_json(capsys, "separable", "--n", "1")
        assert data["max_C"] <= 2 + 1e-9

    def test_separable_bad_n(self, capsys):
        assert run(capsys, "separable", "--n", "3")[0] == 2

    def test_biased(self, capsys):
        data = run_json(capsys, "biased", "--qsq", "0.5")
        assert len(data) == 1
        assert data[0]["C"] == pytest.approx(TSIRELSON, abs=1e-9)

    def test_biased_csv(self, capsys):
        code, out, _ = run(capsys, "biased", "--qsq", "0.2,0.5", "--format", "csv")
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [float(r["qsq"]) for r in rows] == [0.2, 0.5]

    def test_biased_bad_grid(self, capsys):
        assert run(capsys, "biased", "--qsq", "0.5,x")[0] == 2


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "modebell", "horodecki", "--p", "0.5"], capture_output=True, text=True, check=True
    )
    assert json.loads(out.stdout)["horodecki_max_chsh"] == pytest.approx(2.0)


@pytest.mark.slow
@pytest.mark.parametrize(
    "argv",
    [
        ["chsh"],
        ["scan"],
        ["boundary"],
        ["shots"],
        ["horodecki"],
        ["separable"],
        ["separable", "--n", "2"],
        ["biased"],
    ],
)
def test_default_runtime(capsys, argv):
    start = time.perf_counter()
    assert main(argv) == 0
    capsys.readouterr()
    assert time.perf_counter() - start < 60
