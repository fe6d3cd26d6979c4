"""Scenario files and timetable input/output.

A scenario is an INI file whose ``[scenario]`` section points (relative to
the scenario file) at a track CSV (``signal,position_m``), a constraint
table and one train-parameter INI per train. Optional sections hold speed
penalties, descent settings and the noise model.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .constraints import ConstraintTable, loads
from .dynamics import TrainParams
from .errors import ConfigError, TableError
from .stochastic import DEFAULT_THETA, NoiseModel


@dataclass
class ScenarioConfig:
    path: Path
    name: str
    signals: tuple[str, ...]
    positions: np.ndarray
    table: ConstraintTable
    trains: list[TrainParams]
    penalties: np.ndarray  # m x n, m/s
    penalty_form: str = "rate"
    h0: np.ndarray | None = None
    tol: float = 1.0
    max_iter: int = 20
    sim_h: np.ndarray | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)


def bundled_scenario(name: str = "scenario.ini") -> Path:
    """Path of a scenario shipped with the package."""
    return Path(str(resources.files("trainsep") / "data" / "glasgow_edinburgh" / name))


def _floats(text: str, where: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.replace(",", " ").split()], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _read_ini(path: Path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return cp


def read_track(path: Path) -> tuple[tuple[str, ...], np.ndarray]:
    names, xs = [], []
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                try:
                    names.append(row["signal"].strip())
                    xs.append(float(row["position_m"]))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"{path}, line {reader.line_num}: bad track row ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    if len(xs) < 2 or np.any(np.diff(xs) <= 0):
        raise ConfigError(f"{path}: positions must be strictly increasing with at least two signals")
    return tuple(names), np.array(xs)


def read_train_params(path: Path) -> TrainParams:
    cp = _read_ini(path)
    if "train" not in cp:
        raise ConfigError(f"{path}: missing [train] section")
    sec = cp["train"]
    try:
        return TrainParams(**{k: float(v) for k, v in sec.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def write_train_params(params: TrainParams, path) -> None:
    with open(path, "w") as fh:
        fh.write("[train]\n")
        for k, v in asdict(params).items():
            fh.write(f"{k} = {v!r}\n")


def read_table(path: Path) -> ConstraintTable:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        return loads(text)
    except (configparser.Error, TableError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_penalties(sec, table: ConstraintTable, where: str) -> np.ndarray:
    pen = np.zeros((table.m, table.n))
    for train, spec in sec.items():
        if train not in table.trains:
            raise ConfigError(f"{where}: unknown train {train!r}")
        i = table.trains.index(train)
        for item in spec.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                span, value = item.split(":")
                a, b = span.split("-")
                ja, jb = table.signals.index(a.strip()), table.signals.index(b.strip())
                p = float(value)
            except ValueError as exc:
                raise ConfigError(f"{where}: bad penalty {item!r} for {train}") from exc
            if jb <= ja or p < 0:
                raise ConfigError(f"{where}: bad penalty {item!r} for {train}")
            pen[i, ja:jb] = p
    return pen


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    cp = _read_ini(path)
    if "scenario" not in cp:
        raise ConfigError(f"{path}: missing [scenario] section")
    sc = cp["scenario"]
    base = path.parent
    for key in ("track", "table", "trains"):
        if key not in sc:
            raise ConfigError(f"{path}: [scenario] needs '{key}'")
    signals, positions = read_track(base / sc["track"])
    table = read_table(base / sc["table"])
    if tuple(table.signals) != signals:
        raise ConfigError(f"{path}: table signals {table.signals} differ from track {signals}")
    files = [f.strip() for f in sc["trains"].split(",") if f.strip()]
    if len(files) == 1:
        files = files * table.m
    if len(files) != table.m:
        raise ConfigError(f"{path}: {len(files)} train files for {table.m} trains")
    trains = [read_train_params(base / f) for f in files]
    pen = _parse_penalties(cp["penalties"], table, f"{path} [penalties]") if "penalties" in cp else np.zeros((table.m, table.n))
    cfg = ScenarioConfig(
        path=path,
        name=sc.get("name", path.stem),
        signals=signals,
        positions=positions,
        table=table,
        trains=trains,
        penalties=pen,
        penalty_form=sc.get("penalty_form", "rate"),
    )
    try:
        if "optimize" in cp:
            opt = cp["optimize"]
            if "h0" in opt:
                cfg.h0 = _floats(opt["h0"], f"{path} [optimize] h0")
            cfg.tol = opt.getfloat("tol", cfg.tol)
            cfg.max_iter = opt.getint("max_iter", cfg.max_iter)
        if "simulate" in cp:
            sim = cp["simulate"]
            if "h" in sim:
                cfg.sim_h = _floats(sim["h"], f"{path} [simulate] h")
            cfg.noise = NoiseModel(
                theta=sim.getfloat("theta", DEFAULT_THETA),
                seed=sim.getint("seed", 0),
                trials=sim.getint("trials", 10000),
            )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for h in (cfg.h0, cfg.sim_h):
        if h is not None and len(h) != table.n_unknowns:
            raise ConfigError(f"{path}: expected {table.n_unknowns} clearance times, got {len(h)}")
    return cfg


# --- timetables --------------------------------------------------------------


def write_timetable(times: np.ndarray, trains: Sequence[str], signals: Sequence[str], path, precise: bool = False) -> None:
    """Write a train x signal grid; blank cells are untimed.

    The default rounds to whole seconds; ``precise`` writes full precision.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["train", *signals])
        for name, row in zip(trains, np.asarray(times, dtype=float)):
            cells = ["" if np.isnan(t) else (repr(float(t)) if precise else str(int(round(t)))) for t in row]
            w.writerow([name, *cells])


def read_timetable(path) -> tuple[list[str], list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "train":
        raise ConfigError(f"{path}: not a timetable file")
    signals = rows[0][1:]
    trains, grid = [], []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != len(signals) + 1:
            raise ConfigError(f"{path}, line {ln}: expected {len(signals) + 1} fields")
        trains.append(row[0])
        try:
            grid.append([np.nan if c == "" else float(c) for c in row[1:]])
        except ValueError as exc:
            raise ConfigError(f"{path}, line {ln}: {exc}") from exc
    return trains, signals, np.array(grid)


def write_vector(values: Sequence[float], path, header: str = "h") -> None:
    with open(path, "w") as fh:
        fh.write(f"k,{header}\n")
        for k, v in enumerate(values, start=1):
            fh.write(f"{k},{float(v)!r}\n")


def read_vector(path) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return data[:, 1]
