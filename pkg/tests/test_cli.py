"""Command-line pipeline: configuration files in, timetables and reports out."""

import csv
import shutil
import subprocess
import sys

import numpy as np
import pytest
from test_constraints import TABLE6, TABLE8

from trainsep import config as cfgio
from trainsep import scenarios as sc
from trainsep.cli import EXIT_CONFIG, EXIT_OK, EXIT_SEPARATION, EXIT_SOLVER, main
from trainsep.constraints import check_separation
from trainsep.stochastic import parse_stats


@pytest.fixture
def scenario_dir(tmp_path):
    """A writable copy of the bundled scenario files."""
    dst = tmp_path / "scenario"
    shutil.copytree(cfgio.bundled_scenario().parent, dst)
    return dst


def timed_close(got, expected, atol):
    """Compare the timed cells; pass-through cells may carry interpolated times."""
    mask = ~np.isnan(expected)
    np.testing.assert_allclose(got[mask], expected[mask], atol=atol)


def test_bundled_config_matches_scenario():
    cfg = cfgio.load_config(cfgio.bundled_scenario())
    np.testing.assert_array_equal(cfg.positions, sc.POSITIONS)
    assert cfg.table == sc.buffered_table()
    np.testing.assert_array_equal(cfg.penalties, sc.penalty_grid(weighted=True))
    np.testing.assert_array_equal(cfg.sim_h, [505, 841, 1412, 1664, 2107, 2970, 2258, 2580, 3858, 3213, 3458, 4703])


def test_constant_speed_weighted(tmp_path, capsys):
    assert main(["constant-speed", "--out", str(tmp_path)]) == EXIT_OK
    _, signals, times = cfgio.read_timetable(tmp_path / "timetable.csv")
    assert signals == list(sc.STATIONS)
    timed_close(times, TABLE8, atol=1.0)
    assert "energy" in capsys.readouterr().out
    h = cfgio.read_vector(tmp_path / "h.csv")
    np.testing.assert_allclose(h, sc.WEIGHTED_OPTIMUM_H, atol=1.0)
    with open(tmp_path / "speeds.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][1] == "GLQ-BBG" and len(rows) == 5


def test_constant_speed_unweighted(tmp_path):
    cfg = cfgio.bundled_scenario("scenario_unweighted.ini")
    assert main(["constant-speed", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_OK
    _, _, times = cfgio.read_timetable(tmp_path / "timetable.csv")
    timed_close(times, TABLE6, atol=1.0)


def test_timetable_round_trip(tmp_path):
    main(["constant-speed", "--out", str(tmp_path)])
    trains, signals, exact = cfgio.read_timetable(tmp_path / "timetable_full.csv")
    path = tmp_path / "again.csv"
    cfgio.write_timetable(exact, trains, signals, path, precise=True)
    np.testing.assert_array_equal(cfgio.read_timetable(path)[2], exact)
    _, _, rounded = cfgio.read_timetable(tmp_path / "timetable.csv")
    cfgio.write_timetable(rounded, trains, signals, path)
    np.testing.assert_array_equal(cfgio.read_timetable(path)[2], rounded)


def test_malformed_cell_exits_with_config_error(scenario_dir, tmp_path, capsys):
    table = scenario_dir / "table_buffered.ini"
    table.write_text(table.read_text().replace("PMT = h8\n", "PMT = h8+\n", 1))
    code = main(["constant-speed", "--config", str(scenario_dir / "scenario.ini"), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "T2" in err and "PMT" in err


def test_missing_file_exits_with_config_error(scenario_dir, tmp_path, capsys):
    (scenario_dir / "track.csv").unlink()
    code = main(["constant-speed", "--config", str(scenario_dir / "scenario.ini"), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "track.csv" in capsys.readouterr().err


def test_optimize_with_large_tolerance(scenario_dir, tmp_path):
    ini = scenario_dir / "scenario.ini"
    ini.write_text(ini.read_text().replace("tol = 1.0\n", "tol = 1.0\nh0 = " + ", ".join(f"{v:g}" for v in sc.WEIGHTED_OPTIMUM_H) + "\n"))
    out = tmp_path / "o"
    assert main(["optimize", "--config", str(ini), "--out", str(out), "--tol", "1e6"]) == EXIT_OK
    np.testing.assert_array_equal(cfgio.read_vector(out / "h.csv"), sc.WEIGHTED_OPTIMUM_H)
    with open(out / "descent_log.csv", newline="") as fh:
        log = list(csv.DictReader(fh))
    assert len(log) == 1
    assert float(log[0]["J"]) == pytest.approx(50772.0023, abs=0.5)
    _, _, times = cfgio.read_timetable(out / "timetable.csv")
    timed_close(times, TABLE8, atol=0.5)
    with open(out / "strategies.csv", newline="") as fh:
        strategies = list(csv.DictReader(fh))
    assert len(strategies) == 18
    assert sum(float(r["cost"]) for r in strategies) == pytest.approx(float(log[0]["J"]))
    assert len(list((out / "profiles").glob("*.csv"))) == 18


def test_optimize_one_step_keeps_separation(scenario_dir, tmp_path):
    ini = scenario_dir / "scenario.ini"
    text = ini.read_text().replace("max_iter = 20", "max_iter = 1")
    ini.write_text(text.replace("tol = 1.0\n", "tol = 1.0\nh0 = " + ", ".join(f"{v:g}" for v in sc.WEIGHTED_OPTIMUM_H) + "\n"))
    out = tmp_path / "o"
    assert main(["optimize", "--config", str(ini), "--out", str(out)]) == EXIT_OK
    with open(out / "descent_log.csv", newline="") as fh:
        J = [float(r["J"]) for r in csv.DictReader(fh)]
    assert len(J) == 2 and J[1] < J[0]
    _, _, times = cfgio.read_timetable(out / "timetable_full.csv")
    assert check_separation(times, 60.0, 3600.0).ok


def test_simulate_is_seed_deterministic(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for d, seed in [(a, "5"), (b, "5"), (c, "6")]:
        assert main(["simulate", "--out", str(d), "--seed", seed, "--trials", "300"]) == EXIT_OK
    sa = parse_stats((a / "simulation_stats.txt").read_text())
    sb = parse_stats((b / "simulation_stats.txt").read_text())
    sc_ = parse_stats((c / "simulation_stats.txt").read_text())
    assert sa == sb
    assert sa["mean"] != sc_["mean"]
    assert sa["trials"] == "300" and sa["seed"] == "5"
    assert float(sa["theory_mean"]) == pytest.approx(32.2897, abs=0.01)
    assert (a / "minima.csv").read_bytes() == (b / "minima.csv").read_bytes()
    assert (a / "histogram.csv").read_text().startswith("bin_left,count")


def test_simulate_rejects_wrong_h_length(tmp_path, capsys):
    hfile = tmp_path / "h.csv"
    cfgio.write_vector([1.0, 2.0], hfile)
    assert main(["simulate", "--out", str(tmp_path / "o"), "--h", str(hfile), "--trials", "5"]) == EXIT_CONFIG
    assert "12" in capsys.readouterr().err


def test_plot_writes_svgs(scenario_dir, tmp_path):
    ini = scenario_dir / "scenario.ini"
    ini.write_text(ini.read_text().replace("tol = 1.0\n", "tol = 1.0\nh0 = " + ", ".join(f"{v:g}" for v in sc.WEIGHTED_OPTIMUM_H) + "\n"))
    out = tmp_path / "o"
    main(["optimize", "--config", str(ini), "--out", str(out), "--tol", "1e6"])
    assert main(["plot", "--config", str(ini), "--out", str(out)]) == EXIT_OK
    for name in ("train_graph.svg", "speed_profiles.svg"):
        text = (out / name).read_text()
        assert text.lstrip().startswith("<?xml") and "<svg" in text


def test_violating_timetable_exits_4(scenario_dir, tmp_path, capsys):
    # zero-gap clearance references checked against 60 s buffers
    table = scenario_dir / "table_minimal.ini"
    table.write_text(table.read_text().replace("buffers = 0.0, 0.0, 0.0, 0.0", "buffers = 60.0, 60.0, 60.0, 60.0"))
    ini = scenario_dir / "scenario_unweighted.ini"
    out = tmp_path / "o"
    assert main(["constant-speed", "--config", str(ini), "--out", str(out)]) == EXIT_SEPARATION
    assert "separation violated: T1 -> T2 at CRO" in capsys.readouterr().err
    assert main(["plot", "--config", str(ini), "--out", str(out)]) == EXIT_SEPARATION
    assert (out / "train_graph.svg").exists()


def test_solver_failure_exits_3(scenario_dir, tmp_path, capsys):
    ini = scenario_dir / "scenario.ini"
    # CRO to FKK (16.5 km) in two minutes is beyond the train
    h0 = sc.WEIGHTED_OPTIMUM_H.copy()
    h0[2] = h0[1] + 120.0
    ini.write_text(ini.read_text().replace("tol = 1.0\n", "tol = 1.0\nh0 = " + ", ".join(f"{v:g}" for v in h0) + "\n"))
    assert main(["optimize", "--config", str(ini), "--out", str(tmp_path / "o")]) == EXIT_SOLVER
    assert "solver failure" in capsys.readouterr().err


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "trainsep.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("constant-speed", "optimize", "simulate", "plot"):
        assert cmd in res.stdout
