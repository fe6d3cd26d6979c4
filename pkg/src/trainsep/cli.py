"""Command-line front end: ``trainsep <command> --config scenario.ini``.

Commands follow the scheduling pipeline so every stage leaves files behind:

* ``constant-speed``: Newton solve for the constant-speed schedule.
* ``optimize``: steepest descent with realistic strategies, starting from
  the constant-speed optimum rounded to whole seconds (or ``[optimize] h0``).
* ``simulate``: Monte-Carlo minimum separation plus the closed-form model.
* ``plot``: SVG train graph and speed profiles from an ``optimize`` run.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 separation violation in an emitted timetable.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgio
from .constant_speed import CsProblem, cs_solve
from .constraints import check_separation, evaluate, extend_cycle
from .errors import ConfigError, TrainSepError
from .realistic import descend, write_log
from .single_train import write_profile_csv
from .stochastic import (
    NoiseModel,
    active_pairs,
    format_stats,
    run_trials,
    theoretical_separation,
    write_histogram,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_SEPARATION = 4

log = logging.getLogger("trainsep")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_separation(h, table) -> int:
    """Check the timed cells (pass-through interpolations are informative only)."""
    rep = check_separation(evaluate(table, h), table.buffers, table.cycle)
    for v in rep.violations:
        print(
            f"separation violated: {table.trains[v.leader % table.m]} -> "
            f"{table.trains[v.follower % table.m]} at {table.signals[v.signal]}, slack {v.slack:.2f} s",
            file=sys.stderr,
        )
    return EXIT_OK if rep.ok else EXIT_SEPARATION


def _constant_speed(cfg: cfgio.ScenarioConfig, tol: float | None):
    problem = CsProblem(cfg.positions, cfg.table, cfg.trains, cfg.penalties, cfg.penalty_form)
    return cs_solve(problem) if tol is None else cs_solve(problem, tol=tol)


def cmd_constant_speed(args) -> int:
    cfg = cfgio.load_config(args.config)
    sol = _constant_speed(cfg, args.tol)
    out = _out_dir(args)
    t = cfg.table
    cfgio.write_timetable(sol.times, t.trains, t.signals, out / "timetable.csv")
    cfgio.write_timetable(sol.times, t.trains, t.signals, out / "timetable_full.csv", precise=True)
    cfgio.write_vector(sol.h, out / "h.csv")
    with open(out / "speeds.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["train", *[f"{a}-{b}" for a, b in zip(t.signals[:-1], t.signals[1:])]])
        for name, row in zip(t.trains, sol.W):
            w.writerow([name, *[repr(float(v)) for v in row]])
    print(f"constant-speed: {sol.iterations} Newton iterations, energy {sol.cost:.4f} J/kg")
    print("h = " + " ".join(f"{v:.2f}" for v in sol.h))
    return _report_separation(sol.h, t)


def cmd_optimize(args) -> int:
    cfg = cfgio.load_config(args.config)
    if cfg.h0 is not None:
        h0 = cfg.h0
    else:
        h0 = np.round(_constant_speed(cfg, None).h)
        log.info("starting from the rounded constant-speed optimum %s", h0)
    tol = cfg.tol if args.tol is None else args.tol
    res = descend(cfg.table, h0, cfg.trains, cfg.positions, tol=tol, max_iter=cfg.max_iter)
    out = _out_dir(args)
    t = cfg.table
    ev = res.evaluation
    cfgio.write_timetable(ev.times, t.trains, t.signals, out / "timetable.csv")
    cfgio.write_timetable(ev.times, t.trains, t.signals, out / "timetable_full.csv", precise=True)
    cfgio.write_vector(res.h, out / "h.csv")
    write_log(res.history, out / "descent_log.csv")
    prof = out / "profiles"
    prof.mkdir(exist_ok=True)
    with open(out / "strategies.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["train", "segment", "kind", "cost", "driving_speeds"])
        for seg in ev.segments:
            name = t.trains[seg.train]
            span = f"{t.signals[seg.signals[0]]}-{t.signals[seg.signals[-1]]}"
            s = seg.strategy
            w.writerow([name, span, s.kind, repr(float(s.cost)), " ".join(f"{v:.6f}" for v in s.driving_speeds)])
            write_profile_csv(s, prof / f"{name}_{span}.csv")
    first, last = res.history[0].cost, res.history[-1].cost
    print(f"optimize: {len(res.history) - 1} descent steps, J {first:.4f} -> {last:.4f} J/kg")
    print("h = " + " ".join(f"{v:.2f}" for v in res.h))
    return _report_separation(res.h, t)


def cmd_simulate(args) -> int:
    cfg = cfgio.load_config(args.config)
    if args.h is not None:
        h = cfgio.read_vector(args.h)
    elif cfg.sim_h is not None:
        h = cfg.sim_h
    else:
        h = _constant_speed(cfg, None).h
    if len(h) != cfg.table.n_unknowns:
        raise ConfigError(f"expected {cfg.table.n_unknowns} clearance times, got {len(h)}")
    noise = NoiseModel(
        theta=cfg.noise.theta,
        seed=cfg.noise.seed if args.seed is None else args.seed,
        trials=cfg.noise.trials if args.trials is None else args.trials,
    )
    schedule = active_pairs(cfg.table, h)
    if not schedule.pairs:
        raise ConfigError("the table has no active separation pairs to simulate")
    stats, _ = run_trials(schedule, noise)
    theory = theoretical_separation(schedule, noise.theta)
    out = _out_dir(args)
    (out / "simulation_stats.txt").write_text(format_stats(stats, noise, theory))
    write_histogram(stats.minima, out / "histogram.csv")
    np.savetxt(out / "minima.csv", stats.minima, header="min_separation_s", comments="", fmt="%.6f")
    print(
        f"simulate: {noise.trials} trials, mean {stats.mean:.4f} s, sd {stats.sd:.4f} s, "
        f"{stats.violations} violations; theory mean {theory.mean:.4f}, sd {theory.sd:.4f}, "
        f"P[r<0] {theory.p_violation:.4f}"
    )
    return EXIT_OK


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Rectangle

    cfg = cfgio.load_config(args.config)
    out = _out_dir(args)
    src = Path(args.artifacts) if args.artifacts else out
    trains, signals, times = cfgio.read_timetable(src / "timetable_full.csv")
    if tuple(signals) != cfg.signals:
        raise ConfigError(f"{src / 'timetable_full.csv'}: signals do not match the scenario")
    x = cfg.positions / 1000.0
    dwell = cfg.table.dwell

    fig, ax = plt.subplots(figsize=(10, 6))
    for i, name in enumerate(trains):
        for shift in ([0.0, cfg.table.cycle] if cfg.table.cycle and i == 0 else [0.0]):
            ts, xs = [], []
            for j in np.flatnonzero(~np.isnan(times[i])):
                if dwell[i, j] > 0:
                    ts.append(times[i, j] - dwell[i, j] + shift)
                    xs.append(x[j])
                ts.append(times[i, j] + shift)
                xs.append(x[j])
            ax.plot(ts, xs, marker=".", label=name if shift == 0 else f"{name} (next cycle)")
    # shade every timed cell where a follower enters before its leader has left plus the buffer
    timed = np.array([[e is not None for e in row] for row in cfg.table.entries])
    rep = check_separation(np.where(timed, times, np.nan), cfg.table.buffers, cfg.table.cycle)
    grid = extend_cycle(times, cfg.table.cycle)
    for v in rep.violations:
        t0, t1 = grid[v.follower, v.signal - 1], grid[v.leader, v.signal + 1]
        ax.add_patch(
            Rectangle((t0, x[v.signal - 1]), t1 - t0, x[v.signal + 1] - x[v.signal - 1], color="red", alpha=0.3)
        )
    ax.set_yticks(x, cfg.signals)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("position")
    ax.set_title(f"{cfg.name}: train graph")
    ax.legend(fontsize="small")
    fig.savefig(out / "train_graph.svg")
    plt.close(fig)

    profiles = sorted((src / "profiles").glob("*.csv"))
    if profiles:
        fig, ax = plt.subplots(figsize=(10, 4 + 0.5 * len(trains)))
        for k, name in enumerate(trains):
            for p in profiles:
                if not p.stem.startswith(f"{name}_"):
                    continue
                data = np.genfromtxt(p, delimiter=",", names=True, dtype=None, encoding=None)
                ax.plot(data["x_m"] / 1000.0, data["v_mps"] + 50.0 * k, color=f"C{k}")
            ax.text(x[0], 50.0 * k + 2, name)
        ax.set_xticks(x, cfg.signals)
        ax.set_xlabel("position")
        ax.set_ylabel("speed (m/s), trains offset by 50")
        ax.set_title(f"{cfg.name}: speed profiles")
        fig.savefig(out / "speed_profiles.svg")
        plt.close(fig)
    print(f"plot: wrote {out / 'train_graph.svg'}" + (f" and {out / 'speed_profiles.svg'}" if profiles else ""))
    return EXIT_OK if rep.ok else EXIT_SEPARATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trainsep", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tol=True):
        p.add_argument(
            "--config", default=str(cfgio.bundled_scenario()), help="scenario INI (default: bundled corridor)"
        )
        p.add_argument("--out", default="out", help="output directory")
        if tol:
            p.add_argument("--tol", type=float, default=None, help="convergence tolerance")

    p = sub.add_parser("constant-speed", help="constant-speed optimal schedule")
    common(p)
    p.set_defaults(func=cmd_constant_speed)

    p = sub.add_parser("optimize", help="realistic-strategy descent")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="Monte-Carlo separation trials")
    common(p, tol=False)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--h", default=None, help="clearance-time CSV (e.g. h.csv from optimize)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="SVG train graph and speed profiles")
    common(p, tol=False)
    p.add_argument("--artifacts", default=None, help="directory of an optimize run (default: --out)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainSepError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
