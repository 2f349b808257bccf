import json
import math

import pytest

from ergm_phase.cli import main
from ergm_phase.io import parse_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    manifest, columns, rows = parse_csv(text)
    return manifest, [dict(zip(columns, r)) for r in rows]


def test_free_energy_examples(capsys):
    code, out, _ = run(capsys, "free-energy", "--p", "3", "--q", "5", "--beta", "0,0,0")
    assert code == 0
    manifest, rows = csv_rows(out)
    assert manifest["subcommand"] == "free-energy" and manifest["version"]
    assert float(rows[0]["psi"]) == pytest.approx(0.346574, abs=1e-6)
    assert float(rows[0]["u"]) == pytest.approx(0.5)
    code, out, _ = run(capsys, "free-energy", "--beta", "1,0,0")
    assert float(csv_rows(out)[1][0]["u"]) == pytest.approx(0.880797, abs=1e-6)


def test_error_exit_codes(capsys):
    code, _, err = run(capsys, "free-energy", "--beta", "0,-1,0")
    assert code == 3 and json.loads(err)["error"] == "HypothesisViolation"
    code, _, err = run(capsys, "free-energy", "--beta", "0,0,0", "--p", "2", "--q", "10")
    assert code == 3 and json.loads(err)["error"] == "AssumptionViolation"
    code, _, err = run(capsys, "exact", "--n", "7", "--beta", "0,0,0")
    assert code == 5 and json.loads(err)["error"] == "ResourceError"
    code, _, err = run(capsys, "figure", "--id", "9")
    assert code == 2 and json.loads(err)["error"] == "UnknownFigure"
    code, _, err = run(capsys, "free-energy", "--beta", "1,2")
    assert code == 2 and json.loads(err)["error"] == "UsageError"
    code, _, err = run(capsys, "nonsense")
    assert code == 2


def test_negative_beta_values_parse(capsys):
    code, out, _ = run(capsys, "classify", "--beta", "-1,0.5,0")
    assert code == 0
    assert csv_rows(out)[1][0]["phase"] == "OffSurface"


def test_figure_8_has_tied_maxima(capsys):
    code, out, _ = run(capsys, "figure", "--id", "8", "--on-curve", "--format", "json")
    rec = json.loads(out)
    maxima = [r for r in rec["rows"] if r["local_max"]]
    assert len(maxima) == 2 and len(rec["global_maxima"]) == 2
    assert abs(maxima[0]["l"] - maxima[1]["l"]) <= 1e-9 * (1 + abs(maxima[0]["l"]))
    assert rec["curve_beta2"] == pytest.approx(-2.95, abs=0.01)


def test_figure_8_at_rounded_beta2(capsys):
    code, out, _ = run(capsys, "figure", "--id", "8", "--format", "json")
    rec = json.loads(out)
    maxima = [r for r in rec["rows"] if r["local_max"]]
    assert rec["beta"][1] == -2.95 and len(maxima) == 2
    # 0.006 below the exact transition the two heights differ by about 5e-3
    assert 0 < maxima[0]["l"] - maxima[1]["l"] < 1e-2


def test_figure_6_lower_branch_wins(capsys):
    code, out, _ = run(capsys, "figure", "--id", "6", "--format", "json")
    rec = json.loads(out)
    best = max(rec["rows"], key=lambda r: r["l"])
    assert best["u"] < 0.8
    assert rec["global_maxima"] == [min(rec["local_maxima"])]


def test_figure_1_endpoints(capsys):
    code, out, _ = run(capsys, "figure", "--id", "1", "--p", "3", "--q", "5")
    _, rows = csv_rows(out)
    assert float(rows[0]["u0"]) == pytest.approx(2 / 3)
    assert abs(float(rows[0]["beta3"])) < 1e-12
    assert abs(float(rows[-1]["beta2"])) < 1e-12


@pytest.mark.parametrize("fig", [2, 3, 4, 5, 7])
def test_other_figures_render(capsys, fig):
    code, out, _ = run(capsys, "figure", "--id", str(fig), "--resolution", "12")
    assert code == 0 and len(csv_rows(out)[1]) > 3


def test_universality_and_exact(capsys):
    code, out, _ = run(capsys, "universality", "--beta1", "-20", "--beta3", "2", "--p", "3", "--q", "5")
    assert float(csv_rows(out)[1][0]["gap"]) < 0.05
    code, out, _ = run(capsys, "exact", "--n", "2", "--beta", "0,0,0")
    assert float(csv_rows(out)[1][0]["psi_n"]) == pytest.approx(0.173287, abs=1e-6)


def test_surface_critical_curve_observables(capsys):
    code, out, _ = run(capsys, "surface", "--beta3", "0,2", "--beta1", "-2,0,2")
    _, rows = csv_rows(out)
    assert [(float(r["beta3"]), float(r["beta1"])) for r in rows] == [
        (0.0, -2.0), (2.0, -2.0), (2.0, 0.0), (2.0, 2.0)]
    code, out, _ = run(capsys, "critical-curve", "--samples", "5", "--format", "json")
    assert len(json.loads(out)["rows"]) == 5
    code, out, _ = run(capsys, "observables", "--beta", "0,0,0", "--format", "json")
    rec = json.loads(out)
    assert rec["first"] == [[0.5, 0.125, 0.03125]]
    assert rec["second"][0][0] == pytest.approx(0.5)
    code, _, err = run(capsys, "observables", "--beta", "2,-2.95,2")
    assert code == 3


def test_json_roundtrip(capsys):
    code, out, _ = run(capsys, "free-energy", "--beta", "0.2,0.1,0.1", "--format", "json")
    rec = json.loads(out)
    assert json.loads(json.dumps(rec)) == rec
    assert rec["manifest"]["format"] == "json"
    assert math.isfinite(rec["psi"])


def test_sample_is_byte_stable(capsys):
    argv = ["sample", "--n", "20", "--beta", "0,0,0", "--sweeps", "1000", "--seed", "7"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    manifest, rows = csv_rows(a)
    assert manifest["rng"] == "numpy.random.PCG64" and len(rows) == 1000


def test_deterministic_outputs_are_byte_stable(capsys):
    _, a, _ = run(capsys, "figure", "--id", "2", "--resolution", "10")
    _, b, _ = run(capsys, "figure", "--id", "2", "--resolution", "10")
    assert a == b


def test_output_paths(capsys, tmp_path, monkeypatch):
    target = tmp_path / "fe.json"
    assert main(["free-energy", "--beta", "0,0,0", "--format", "json", "--out", str(target)]) == 0
    assert json.loads(target.read_text())["u_star"] == 0.5
    monkeypatch.setenv("ERGM_PHASE_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["exact", "--n", "3", "--beta", "0,0,0"]) == 0
    assert (tmp_path / "env" / "exact.csv").exists()
    assert main(["exact", "--n", "3", "--beta", "0,0,0", "--out", "sub/x.csv"]) == 0
    assert (tmp_path / "env" / "sub" / "x.csv").exists()
    assert capsys.readouterr().out == ""
