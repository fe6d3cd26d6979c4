"""Stochastic journey evolution and the distribution of minimum separation.

The error in the time at which a train reaches a timed location is modelled
as a scaled Wiener process in scheduled time. Each timed entry of a train's
row is perturbed by ``theta * z * sqrt(dt)`` where ``dt`` is the scheduled
time since the previous timed entry of that row and ``z`` is standard
normal; the first entry (the origin departure) is left alone.

Separation is measured on the *active* pairs of a constraint table: cells of
consecutive trains that reference the same clearance time, so that the
scheduled gap between the leader leaving ``x_{j+1}`` and the follower
entering at ``x_{j-1}`` is exactly the buffer. With independent increments
each pair's gap is ``gap0 + s * z`` and the minimum over all pairs has the
closed-form CDF ``F(x) = 1 - prod(1 - Phi((x - gap0) / s))``.

Random numbers come from numpy's PCG64 generator. Trial ``k`` draws from the
``k``-th child of ``SeedSequence(seed)``, so results do not depend on the
order in which trials are run.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .constraints import ConstraintTable, TimeExpr, evaluate
from .errors import NegativeVarianceTerm

# observed journey-time spread used to calibrate theta
REFERENCE_SPREAD = 30.0
REFERENCE_JOURNEY = 3120.0
DEFAULT_THETA = REFERENCE_SPREAD / math.sqrt(REFERENCE_JOURNEY)


@dataclass(frozen=True)
class NoiseModel:
    theta: float = DEFAULT_THETA
    seed: int = 0
    trials: int = 10000

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be non-negative")
        if self.trials < 1:
            raise ValueError("at least one trial is needed")


@dataclass(frozen=True)
class SeparationPair:
    """Follower cell ``(follower, col_f)`` against leader cell ``(leader, col_l)``."""

    leader: int
    follower: int
    signal: int  # j: the leader is timed at j+1, the follower at j-1
    gap: float  # scheduled follower time minus leader time


@dataclass
class SeparationSchedule:
    """Scheduled rows (wrap-around train appended when cyclic) and active pairs."""

    rows: np.ndarray  # NaN where untimed
    pairs: list[SeparationPair]

    def gaps(self, rows: np.ndarray) -> np.ndarray:
        return np.array([rows[p.follower, p.signal - 1] - rows[p.leader, p.signal + 1] for p in self.pairs])

    def increments(self) -> np.ndarray:
        """Scheduled time since the previous timed entry of the same row (0 for the first)."""
        return _increments(self.rows)


@dataclass
class SeparationStats:
    minima: np.ndarray  # per-trial minimum separation
    mean: float
    sd: float
    minimum: float
    violations: int
    first_violation: int | None  # 0-based trial index

    @classmethod
    def from_minima(cls, minima: np.ndarray) -> "SeparationStats":
        minima = np.asarray(minima, dtype=float)
        bad = np.flatnonzero(minima < 0)
        return cls(
            minima=minima,
            mean=float(minima.mean()),
            sd=float(minima.std(ddof=1)) if len(minima) > 1 else 0.0,
            minimum=float(minima.min()),
            violations=int(len(bad)),
            first_violation=int(bad[0]) if len(bad) else None,
        )


@dataclass
class TheoreticalSeparation:
    S: np.ndarray  # rows: active signals, columns: leading train; NaN where no pair
    signals: list[int]
    scales: np.ndarray  # per pair, same order as schedule.pairs
    gaps: np.ndarray
    cdf: Callable[[np.ndarray], np.ndarray]
    pdf: Callable[[np.ndarray], np.ndarray]
    mean: float
    sd: float
    p_violation: float


# --- schedule construction -------------------------------------------------------


def _cyclic_entries(table: ConstraintTable) -> list[list[TimeExpr | None]]:
    rows = [list(r) for r in table.entries]
    if table.cycle is not None:
        rows.append([None if e is None else e.shifted(table.cycle) for e in table.entries[0]])
    return rows


def active_pairs(table: ConstraintTable, h: Sequence[float]) -> SeparationSchedule:
    """Rows of scheduled times and the pairs whose cells share a clearance time."""
    entries = _cyclic_entries(table)
    times = evaluate(table, h)
    if table.cycle is not None:
        times = np.vstack([times, times[:1] + table.cycle])
    n = table.n
    pairs = []
    for i in range(len(entries) - 1):
        for j in range(1, n):
            lead, follow = entries[i][j + 1], entries[i + 1][j - 1]
            if lead is None or follow is None or lead.k is None or lead.k != follow.k:
                continue
            pairs.append(SeparationPair(i, i + 1, j, float(times[i + 1, j - 1] - times[i, j + 1])))
    return SeparationSchedule(times, pairs)


def _increments(rows: np.ndarray) -> np.ndarray:
    inc = np.zeros_like(rows)
    for r, row in enumerate(rows):
        cols = np.flatnonzero(~np.isnan(row))
        inc[r, cols[1:]] = np.diff(row[cols])
        inc[r, np.isnan(row)] = np.nan
    return inc


# --- simulation ------------------------------------------------------------------


def perturb_schedule(rows: np.ndarray, theta: float, rng: np.random.Generator) -> np.ndarray:
    """One realisation of the actual times: ``row + theta * z * sqrt(increment)``.

    Untimed (NaN) cells stay NaN and consume no random numbers' worth of
    influence; the first timed entry of each row is never perturbed.
    """
    rows = np.asarray(rows, dtype=float)
    inc = _increments(rows)
    if np.any(inc[~np.isnan(inc)] < 0):
        raise ValueError("schedule rows must be increasing")
    z = rng.standard_normal(rows.shape)
    return rows + theta * z * np.sqrt(inc)


def trial_generators(seed: int, trials: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(trials)]


def run_trials(schedule: SeparationSchedule, noise: NoiseModel, keep: Sequence[int] = ()) -> tuple[SeparationStats, dict]:
    """Monte-Carlo minimum separation over the active pairs.

    Returns the statistics and a dict of the perturbed rows for any trial
    indices listed in ``keep``.
    """
    minima = np.empty(noise.trials)
    kept = {}
    keep = set(keep)
    for k, rng in enumerate(trial_generators(noise.seed, noise.trials)):
        actual = perturb_schedule(schedule.rows, noise.theta, rng)
        minima[k] = schedule.gaps(actual).min()
        if k in keep:
            kept[k] = actual
    return SeparationStats.from_minima(minima), kept


def wiener_path(theta: float, t_grid: Sequence[float], n: int, rng: np.random.Generator) -> np.ndarray:
    """Scaled random-walk approximation ``theta / sqrt(n) * sum_{k <= floor(n t)} xi_k``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    t = np.asarray(t_grid, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    steps = np.floor(n * t + 1e-12).astype(int)
    xi = rng.standard_normal(int(steps.max(initial=0)))
    walk = np.concatenate([[0.0], np.cumsum(xi)])
    return theta * walk[steps] / math.sqrt(n)


# --- closed form -----------------------------------------------------------------


def theoretical_separation(schedule: SeparationSchedule, theta: float) -> TheoreticalSeparation:
    """Scales, CDF, density and moments of the minimum gap over the active pairs."""
    inc = schedule.increments()
    scales, gaps = [], []
    for p in schedule.pairs:
        a, b = inc[p.follower, p.signal - 1], inc[p.leader, p.signal + 1]
        if a < 0 or b < 0:
            raise NegativeVarianceTerm(f"negative increment in pair leader {p.leader}, signal {p.signal}")
        scales.append(theta * math.sqrt(a + b))
        gaps.append(p.gap)
    scales, gaps = np.array(scales), np.array(gaps)

    signals = sorted({p.signal for p in schedule.pairs})
    S = np.full((len(signals), len(schedule.rows) - 1), np.nan)
    for p, s in zip(schedule.pairs, scales):
        S[signals.index(p.signal), p.leader] = s

    if np.any(scales == 0):
        g0 = float(gaps[scales == 0].min())
        lo = min(g0, float(gaps.min()))
        return TheoreticalSeparation(
            S, signals, scales, gaps,
            cdf=lambda x: (np.asarray(x, dtype=float) >= lo).astype(float),
            pdf=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            mean=lo, sd=0.0, p_violation=float(lo < 0),
        )

    def cdf(x):
        x = np.asarray(x, dtype=float)[..., None]
        return 1.0 - np.prod(norm.sf((x - gaps) / scales), axis=-1)

    def pdf(x):
        x = np.asarray(x, dtype=float)[..., None]
        zs = (x - gaps) / scales
        sf = norm.sf(zs)
        dens = norm.pdf(zs) / scales
        total = np.zeros(x.shape[:-1])
        for k in range(len(scales)):
            total = total + dens[..., k] * np.prod(np.delete(sf, k, axis=-1), axis=-1)
        return total

    lo = float(gaps.min() - 8 * scales.max())
    hi = float(gaps.max() + 8 * scales.max())
    m0 = integrate.quad(lambda x: float(pdf(x)), lo, hi, limit=200)[0]
    m1 = integrate.quad(lambda x: x * float(pdf(x)), lo, hi, limit=200)[0] / m0
    m2 = integrate.quad(lambda x: (x - m1) ** 2 * float(pdf(x)), lo, hi, limit=200)[0] / m0
    return TheoreticalSeparation(S, signals, scales, gaps, cdf, pdf, m1, math.sqrt(m2), float(cdf(0.0)))


# --- output ----------------------------------------------------------------------


def write_histogram(minima: Sequence[float], path, width: float = 2.0) -> None:
    minima = np.asarray(minima, dtype=float)
    lo = math.floor(minima.min() / width) * width
    hi = math.ceil(minima.max() / width) * width + width
    counts, edges = np.histogram(minima, bins=np.arange(lo, hi + width / 2, width))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_left", "count"])
        for e, c in zip(edges[:-1], counts):
            w.writerow([f"{e:g}", int(c)])


def format_stats(stats: SeparationStats, noise: NoiseModel, theory: TheoreticalSeparation | None = None) -> str:
    lines = [
        f"theta = {noise.theta!r}",
        f"seed = {noise.seed}",
        f"trials = {noise.trials}",
        f"mean = {stats.mean!r}",
        f"sd = {stats.sd!r}",
        f"minimum = {stats.minimum!r}",
        f"violations = {stats.violations}",
        f"first_violation = {'' if stats.first_violation is None else stats.first_violation + 1}",
    ]
    if theory is not None:
        lines += [
            f"theory_mean = {theory.mean!r}",
            f"theory_sd = {theory.sd!r}",
            f"theory_p_violation = {theory.p_violation!r}",
        ]
    return "\n".join(lines) + "\n"


def parse_stats(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
