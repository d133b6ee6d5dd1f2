import json
import math
import subprocess
import sys

import numpy as np
import pytest

from collcpt import __version__
from collcpt.cli import EXIT_INVALID, EXIT_NUMERICAL, main, parse_assignments
from collcpt.params import SystemParams
from collcpt.scan import (
    COLUMNS,
    InvalidSpecError,
    ScanSpec,
    Sweep,
    evaluate_point,
    fmt,
    presets,
    read_scan,
    run_rows,
    run_scan,
)


@pytest.fixture(scope="module")
def fig2_rows():
    return run_rows(presets()["fig2"])


def series(rows, key, value):
    sel = [(p, r) for p, r in rows if getattr(p, key) == value]
    return np.array([p.delta for p, _ in sel]), np.array([r.value for _, r in sel])


def test_presets_exact_set():
    assert set(presets()) == {"fig2", "fig4", "fig5", "fig7"}


def test_preset_parameters():
    ps = presets()
    assert ps["fig2"].sweeps[0].points == (0.0, 0.5, 2.0)
    assert ps["fig2"].fixed.omega2 == ps["fig2"].fixed.omega3 == 5.0
    assert ps["fig2"].route == "bare"
    assert ps["fig5"].sweeps[0].points == (10, 100, 1000)
    assert ps["fig7"].sweeps[0].points == (2, 4, 20)
    fig4 = ps["fig4"]
    assert fig4.sweeps[0].points == tuple(range(1, 51))
    assert len(fig4.sweeps[1].points) == 51


def test_fig2_transparency_window_washes_out(fig2_rows):
    centres = []
    for nbar in (0.0, 0.5, 2.0):
        delta, value = series(fig2_rows, "nbar2", nbar)
        mid = int(np.flatnonzero(delta == 0)[0])
        assert value[mid] < value[mid - 1] and value[mid] < value[mid + 1]
        centres.append(value[mid])
    assert centres[0] < 1e-8
    assert centres[0] < centres[1] < centres[2]
    _, clean = series(fig2_rows, "nbar2", 0.0)
    assert clean.argmin() == 150


def test_fig5_curves_ordered_downward_with_n():
    rows = run_rows(presets()["fig5"])
    per_atom = {n: np.array([r.value / n for p, r in rows if p.n_atoms == n]) for n in (10, 100, 1000)}
    assert np.all(per_atom[10] > per_atom[100]) and np.all(per_atom[100] > per_atom[1000])


def test_fig7_ratio_below_one_and_decreasing():
    rows = run_rows(presets()["fig7"])
    curves = {n: np.array([r.value for p, r in rows if p.n_atoms == n]) for n in (2, 4, 20)}
    assert np.all(curves[2] < 1)
    assert np.all(curves[2] > curves[4]) and np.all(curves[4] > curves[20])


def test_sweep_parse():
    s = Sweep.parse("delta:-1:1:5")
    assert s.var == "delta" and s.points == (-1.0, -0.5, 0.0, 0.5, 1.0)
    assert s.source == "delta:-1:1:5"
    s = Sweep.parse("nbar:0.01:100:5:log")
    assert s.points == (0.01, 0.1, 1.0, 10.0, 100.0)
    assert Sweep.parse("N:1:4:4").points == (1, 2, 3, 4)
    assert Sweep.parse("delta:0:1:3").points == (0.0, 0.5, 1.0)


@pytest.mark.parametrize("text", [
    "delta:0:1", "foo:0:1:3", "delta:a:1:3", "delta:0:1:1", "nbar:0:1:3:log", "N:1.5:2.5:2", "N:1:3:10", "delta:0:1:3:cubic",
])
def test_sweep_parse_errors(text):
    with pytest.raises(InvalidSpecError):
        Sweep.parse(text)


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(7) == "7"
    assert fmt(math.inf) == fmt(math.nan) == "nan"
    assert fmt(-0.0) == "0"
    assert fmt(None) == ""
    assert fmt(1e-20) == "1e-20"


@pytest.mark.parametrize("kwargs", [
    dict(quantity="nonsense"),
    dict(quantity="upper_population_dressed", route="bare"),
    dict(quantity="upper_population_numeric", sweeps=(Sweep.parse("N:10:14:5"),)),
    dict(quantity="upper_population_dressed", sweeps=(Sweep.parse("delta:-1:1:3"),)),
    dict(quantity="dark_residual", sweeps=(Sweep.parse("N:39:42:4"),)),
    dict(tol=0.0),
    dict(sweeps=(Sweep.parse("nbar:0:1:3"), Sweep.parse("nbar:0:2:3"))),
    dict(sweeps=(Sweep.parse("omega2:-1:1:3"),)),
])
def test_invalid_specs_rejected(kwargs):
    base = dict(quantity="upper_population_analytic", sweeps=(Sweep.parse("nbar:0:1:3"),),
                fixed=SystemParams(5.0, 5.0))
    base.update(kwargs)
    with pytest.raises(InvalidSpecError):
        ScanSpec(**base)


def test_csv_layout_and_determinism():
    spec = ScanSpec(quantity="upper_population_dressed", sweeps=(Sweep.parse("N:1:3:3"), Sweep.parse("nbar:0:2:3")),
                    fixed=SystemParams(5.0, 5.0))
    text = run_scan(spec)
    assert text == run_scan(spec) == run_scan(spec, jobs=2)
    lines = text.split("\n")
    assert lines[0] == f"# collcpt {__version__}"
    echo = json.loads(lines[1].removeprefix("# spec: "))
    assert echo["quantity"] == "upper_population_dressed" and echo["sweeps"] == ["N:1:3:3", "nbar:0:2:3"]
    assert lines[2] == ",".join(COLUMNS)
    assert "\r" not in text and text.endswith("\n")
    rows = read_scan(text)
    assert len(rows) == 9
    assert [(r["n_atoms"], r["nbar2"]) for r in rows[:4]] == [("1", "0"), ("1", "1"), ("1", "2"), ("2", "0")]
    assert float(rows[1]["value"]) == pytest.approx(0.25, abs=1e-12)
    assert float(rows[4]["per_atom"]) == pytest.approx(5 / 22, abs=1e-12)
    assert all(math.isfinite(float(r["value"])) for r in rows)


def test_degenerate_points_emit_nan_with_reason():
    spec = ScanSpec(quantity="capacity_ratio", sweeps=(Sweep.parse("nbar:0:1:2"),), fixed=SystemParams(5.0, 5.0, n_atoms=2))
    rows = read_scan(run_scan(spec))
    assert rows[0]["value"] == "nan" and "0/0" in rows[0]["reason"]
    assert float(rows[1]["value"]) == pytest.approx(11 / 16, abs=1e-12) and rows[1]["reason"] == ""
    spec = ScanSpec(quantity="xi", sweeps=(Sweep.parse("nbar:0:1:2"),), fixed=SystemParams(5.0, 5.0))
    rows = read_scan(run_scan(spec))
    assert rows[0]["value"] == "nan" and rows[0]["reason"]
    assert float(rows[1]["value"]) == pytest.approx(math.log(0.5), abs=1e-12)


def test_detuned_collective_points_are_flagged():
    r = evaluate_point("upper_population_numeric", "bare", SystemParams(5.0, 5.0, delta=1.0, n_atoms=2), 1e-10)
    assert r.flag == "beyond_analytic_regime"
    r = evaluate_point("upper_population_numeric", "bare", SystemParams(5.0, 5.0, delta=1.0), 1e-10)
    assert r.flag == ""


def test_dark_residual_quantity():
    spec = ScanSpec(quantity="dark_residual", sweeps=(Sweep.parse("N:1:40:40"),), fixed=SystemParams(1.0, 3.0))
    assert all(r.value <= 1e-10 for _, r in run_rows(spec))


def test_parse_assignments():
    p = parse_assignments(["N=3", "nbar=0.5", "omega3=2"])
    assert (p.n_atoms, p.nbar2, p.nbar3, p.omega2, p.omega3) == (3, 0.5, 0.5, 5.0, 2.0)
    for bad in (["N"], ["bogus=1"], ["N=x"], ["gamma2=-1"]):
        with pytest.raises(InvalidSpecError):
            parse_assignments(bad)


def test_cli_scan_to_file(tmp_path, capsys):
    out = tmp_path / "scan.csv"
    code = main(["scan", "--quantity", "upper_population_analytic", "--sweep", "nbar:0:1:3",
                 "--set", "N=2", "--out", str(out)])
    assert code == 0
    rows = read_scan(out.read_text())
    assert float(rows[2]["value"]) == pytest.approx(5 / 11, abs=1e-12)
    assert capsys.readouterr().out == ""


def test_cli_scan_to_stdout(capsys):
    assert main(["scan", "--quantity", "xi", "--sweep", "nbar:1:2:2"]) == 0
    assert read_scan(capsys.readouterr().out)[0]["value"] == fmt(math.log(0.5))


@pytest.mark.parametrize("argv", [
    ["scan", "--quantity", "upper_population_numeric", "--sweep", "N:1:13:13"],
    ["scan", "--quantity", "upper_population_dressed", "--sweep", "delta:-1:1:3"],
    ["scan", "--quantity", "xi"],
    ["scan", "--quantity", "xi", "--sweep", "nbar:0:1:3", "--set", "omega2=-1"],
    ["scan", "--quantity", "xi", "--sweep", "nbar:0:1:3", "--tol", "-1"],
])
def test_cli_invalid_spec_exit_code(argv, capsys):
    assert main(argv) == EXIT_INVALID
    assert "invalid spec" in capsys.readouterr().err


def test_cli_numerical_failure_exit_code(capsys):
    argv = ["scan", "--quantity", "upper_population_numeric", "--sweep", "nbar:0.5:1:2", "--tol", "1e-30"]
    assert main(argv) == EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_cli_preset_matches_library(tmp_path):
    out = tmp_path / "fig7.csv"
    assert main(["preset", "fig7", "--out", str(out)]) == 0
    assert out.read_text() == run_scan(presets()["fig7"])


def test_cli_check_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 6


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "collcpt", "scan", "--quantity", "xi", "--sweep", "nbar:1:2:2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert read_scan(proc.stdout)[1]["nbar3"] == "2"
