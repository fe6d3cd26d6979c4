"""Clearance-time optimisation with realistic driving strategies.

Every evaluation of the fleet cost solves each train's stop-to-stop
segments exactly. The derivative of a train's cost with respect to the
time of one of its timed cells is the jump in marginal cost rate across
that cell, ``psi(after) - psi(before)``, where a final section without a
speedhold uses the psi-dagger rate. The schedule is improved by steepest
descent with a golden-section search along the negative gradient.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constraints import ConstraintTable, check_separation, evaluate
from .dynamics import TrainParams
from .errors import Infeasible, SegmentError, StepInfeasible, TrainSepError
from .single_train import SegmentSpec, Strategy, solve_timed_sections

log = logging.getLogger(__name__)

GOLDEN_ITERS = 40
R_MAX_FRACTION = 0.9
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class Segment:
    train: int
    signals: tuple[int, ...]  # timed signal indices, first and last are stops
    strategy: Strategy


@dataclass
class FleetEvaluation:
    h: np.ndarray
    times: np.ndarray
    segments: list[Segment]
    costs: np.ndarray  # per train
    speeds: np.ndarray  # m x n driving speed per section (merged sections share)
    rates: np.ndarray  # m x n marginal cost rate per section (psi or psi-dagger)
    unheld: np.ndarray  # m x n, True where the rate is psi-dagger

    @property
    def total(self) -> float:
        return float(self.costs.sum())


def stops_of(table: ConstraintTable, i: int) -> list[int]:
    """Origin, terminus and every signal with a dwell for train ``i``."""
    n = table.n
    return [0] + [j for j in range(1, n) if table.dwell[i, j] > 0] + [n]


def train_segments(table: ConstraintTable, i: int, positions: np.ndarray, times: np.ndarray):
    """Split train ``i``'s timed cells into stop-to-stop SegmentSpecs."""
    stops = stops_of(table, i)
    timed = set(table.timed(i))
    missing = [table.signals[s] for s in stops if s not in timed]
    if missing:
        raise Infeasible(f"train {table.trains[i]}: stops {missing} have no timed cell")
    out = []
    for a, b in zip(stops[:-1], stops[1:]):
        sig = tuple(j for j in range(a, b + 1) if j in timed)
        t = [times[i, j] for j in sig]
        t[-1] -= table.dwell[i, b]  # arrive before dwelling
        out.append((sig, SegmentSpec(tuple(positions[j] for j in sig), tuple(t))))
    return out


def evaluate_fleet(
    table: ConstraintTable,
    h: Sequence[float],
    trains: Sequence[TrainParams] | TrainParams,
    positions: Sequence[float],
) -> FleetEvaluation:
    h = np.asarray(h, dtype=float)
    positions = np.asarray(positions, dtype=float)
    if isinstance(trains, TrainParams):
        trains = [trains] * table.m
    times = evaluate(table, h)
    m, n = table.m, table.n
    costs = np.zeros(m)
    speeds = np.full((m, n), np.nan)
    rates = np.full((m, n), np.nan)
    unheld = np.zeros((m, n), dtype=bool)
    segments = []
    for i in range(m):
        for sig, spec in train_segments(table, i, positions, times):
            try:
                strat = solve_timed_sections(trains[i], spec)
            except TrainSepError as exc:
                raise SegmentError(table.trains[i], f"{table.signals[sig[0]]}-{table.signals[sig[-1]]}", exc) from exc
            segments.append(Segment(i, sig, strat))
            costs[i] += strat.cost
            psi = strat.psi_entries
            for s, (a, b) in enumerate(zip(sig[:-1], sig[1:])):
                speeds[i, a:b] = strat.driving_speeds[s]
                rates[i, a:b] = psi[s]
            if not strat.final_held:
                unheld[i, sig[-2] : sig[-1]] = True
    return FleetEvaluation(h, times, segments, costs, speeds, rates, unheld)


def fleet_gradient(ev: FleetEvaluation, table: ConstraintTable) -> np.ndarray:
    """dJ/dh_k as the sum over cells referencing h_k of the rate jump across the cell."""
    grad = np.zeros(table.n_unknowns)
    n = table.n
    for i, row in enumerate(table.entries):
        for j, e in enumerate(row):
            if e is None or e.k is None:
                continue
            after = ev.rates[i, j] if j < n else 0.0
            before = ev.rates[i, j - 1] if j > 0 else 0.0
            grad[e.k - 1] += after - before
    return grad


def max_step(table: ConstraintTable, h: np.ndarray, direction: np.ndarray) -> float:
    """Largest r keeping every running time between timed cells positive along h + r*d."""
    t0 = evaluate(table, h)
    t1 = evaluate(table, h + direction) - t0  # change per unit r
    r_lim = np.inf
    for i in range(table.m):
        cols = table.timed(i)
        for a, b in zip(cols[:-1], cols[1:]):
            dt = t0[i, b] - t0[i, a] - table.dwell[i, a + 1 : b + 1].sum()
            slope = t1[i, b] - t1[i, a]
            if slope < 0:
                r_lim = min(r_lim, dt / -slope)
    return r_lim


def golden_section(f, lo: float, hi: float, iters: int = GOLDEN_ITERS):
    """Minimise a unimodal ``f`` on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


@dataclass
class DescentStep:
    iteration: int
    r: float
    cost: float
    grad_norm: float


@dataclass
class DescentResult:
    h: np.ndarray
    evaluation: FleetEvaluation
    history: list[DescentStep] = field(default_factory=list)


def descend(
    table: ConstraintTable,
    h0: Sequence[float],
    trains: Sequence[TrainParams] | TrainParams,
    positions: Sequence[float],
    tol: float = 1.0,
    max_iter: int = 20,
    r_max: float | None = None,
) -> DescentResult:
    """Steepest descent on the fleet cost from a feasible clearance-time vector.

    Each iteration minimises ``J(h - r * grad)`` over ``r`` in ``[0, r_max]``
    by golden-section search. A step is taken only if it lowers the cost by
    more than ``tol``; otherwise the current schedule is returned. The
    history holds one row per iteration plus a final row for the returned
    schedule.
    """
    h = np.array(h0, dtype=float)
    ev = evaluate_fleet(table, h, trains, positions)
    g = fleet_gradient(ev, table)
    history: list[DescentStep] = []
    for it in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            break
        d = -g
        hi = r_max if r_max is not None else R_MAX_FRACTION * max_step(table, h, d)
        if not np.isfinite(hi):
            raise StepInfeasible("descent direction leaves every running time unbounded")
        cache: dict[float, tuple[float, FleetEvaluation | None]] = {}

        def f(r):
            if r not in cache:
                try:
                    cand = evaluate_fleet(table, h + r * d, trains, positions)
                    rep = check_separation(cand.times, table.buffers, table.cycle)
                    cache[r] = (cand.total if rep.ok else np.inf, cand)
                except TrainSepError:
                    cache[r] = (np.inf, None)
            return cache[r][0]

        r_best, j_best = golden_section(f, 0.0, hi)
        if not np.isfinite(j_best):
            raise StepInfeasible(f"no feasible step in (0, {hi:.4g}]")
        if r_best <= 1e-9 * max(hi, 1.0):
            warnings.warn("line search returned r = 0 with a nonzero gradient; treating as converged")
            break
        decrease = ev.total - j_best
        if decrease <= tol:
            break
        history.append(DescentStep(it, float(r_best), ev.total, gnorm))
        log.info("iteration %d: r=%.6g J=%.6f -> %.6f", it, r_best, ev.total, j_best)
        h = h + r_best * d
        ev = cache[r_best][1]
        g = fleet_gradient(ev, table)
    history.append(DescentStep(len(history), 0.0, ev.total, float(np.linalg.norm(g))))
    return DescentResult(h, ev, history)


def write_log(history: Sequence[DescentStep], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "r", "J", "grad_norm"])
        for s in history:
            w.writerow([s.iteration, repr(float(s.r)), repr(float(s.cost)), repr(float(s.grad_norm))])
