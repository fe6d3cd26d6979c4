"""Optimal clearance times when every train holds a constant speed per section group.

For each train the timed cells of the constraint table split the journey
into groups; a group runs from timed signal ``a`` to the next timed signal
``b`` at the single speed ``W = (x_b - x_a) / dt`` where

    dt = t_b - t_a - (dwell at every stop in (a, b]).

Untimed cells therefore merge neighbouring sections into one group. The
energy of a group is ``r(W) * (x_b - x_a)``; optional per-section speed
penalties ``p_j`` make a train pay as if it ran faster on section ``j``.
The fleet objective is convex in ``h`` and is minimised by a damped Newton
iteration.

Penalties come in two forms. ``"rate"`` (default) charges each section at
the marginal rate ``psi(W + p)``: the objective per metre is the
antiderivative ``c_p`` with ``W^2 c_p'(W) = psi(W + p)``, so gradient
entries are differences of ``psi(W + p)``. ``"resistance"`` uses
``r(W + p)`` per metre directly. Both reduce to ``r(W)`` when ``p = 0``.
``cs_cost`` always reports the unpenalised energy; ``cs_objective`` is the
penalised quantity that is minimised, and the gradient and Hessian refer to
it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constraints import ConstraintTable, evaluate
from .dynamics import TrainParams
from .errors import Diverged, InfeasibleIterate, NonpositiveSectionTime

GRAD_TOL = 1e-8
MAX_ITER = 50
PENALTY_FORMS = ("rate", "resistance")


@dataclass(frozen=True)
class _Group:
    train: int
    a: int
    b: int
    ka: int | None  # unknown index (0-based) of cell a, if any
    kb: int | None
    ca: float  # constant part of t_a
    cb: float
    dwell: float
    lengths: np.ndarray  # section lengths inside the group
    penalties: np.ndarray
    sections: tuple[int, ...]  # 1-based section indices j in (a, b]


@dataclass
class CsProblem:
    """Constant-speed scheduling problem.

    ``penalties[i, j-1]`` is the speed penalty on section ``j`` for train
    ``i`` (m/s, default 0). ``trains`` is one TrainParams per train or a
    single instance shared by all.
    """

    positions: np.ndarray
    table: ConstraintTable
    trains: Sequence[TrainParams] | TrainParams
    penalties: np.ndarray | None = None
    penalty_form: str = "rate"
    groups: list[_Group] = field(init=False, repr=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        m, n = self.table.m, self.table.n
        if len(self.positions) != n + 1:
            raise ValueError(f"{len(self.positions)} positions for {n + 1} signals")
        if np.any(np.diff(self.positions) <= 0):
            raise ValueError("positions must be strictly increasing")
        if isinstance(self.trains, TrainParams):
            self.trains = [self.trains] * m
        if len(self.trains) != m:
            raise ValueError("one TrainParams per train")
        pen = np.zeros((m, n)) if self.penalties is None else np.asarray(self.penalties, dtype=float)
        if pen.shape != (m, n) or np.any(pen < 0):
            raise ValueError("penalties must be a non-negative m x n grid")
        self.penalties = pen
        if self.penalty_form not in PENALTY_FORMS:
            raise ValueError(f"penalty_form must be one of {PENALTY_FORMS}")
        self.groups = self._build_groups()
        referenced = {g.ka for g in self.groups} | {g.kb for g in self.groups}
        missing = set(range(self.table.n_unknowns)) - referenced
        if missing:
            raise ValueError(f"unknowns {sorted(k + 1 for k in missing)} do not affect any section time")

    def _build_groups(self) -> list[_Group]:
        out = []
        dx = np.diff(self.positions)
        for i in range(self.table.m):
            cols = self.table.timed(i)
            row = self.table.entries[i]
            for a, b in zip(cols[:-1], cols[1:]):
                ea, eb = row[a], row[b]
                secs = tuple(range(a + 1, b + 1))
                out.append(
                    _Group(
                        train=i,
                        a=a,
                        b=b,
                        ka=None if ea.k is None else ea.k - 1,
                        kb=None if eb.k is None else eb.k - 1,
                        ca=ea.c,
                        cb=eb.c,
                        dwell=float(self.table.dwell[i, a + 1 : b + 1].sum()),
                        lengths=dx[a:b].copy(),
                        penalties=self.penalties[i, a:b].copy(),
                        sections=secs,
                    )
                )
        return out

    @property
    def n_unknowns(self) -> int:
        return self.table.n_unknowns


@dataclass
class CsSolution:
    h: np.ndarray
    W: np.ndarray  # m x n, speed on each section
    cost: float  # unpenalised energy
    objective: float
    grad_norm: float
    iterations: int
    times: np.ndarray  # m x (n+1) with interpolated pass-through times


def _dt(g: _Group, h: np.ndarray) -> float:
    tb = g.cb + (h[g.kb] if g.kb is not None else 0.0)
    ta = g.ca + (h[g.ka] if g.ka is not None else 0.0)
    return tb - ta - g.dwell


def rate_cost(p: TrainParams, W: float, pen: float) -> float:
    """Per-metre cost ``c_p(W)`` whose marginal rate is ``psi(W + pen)``.

    Closed form for Davis resistance; equals ``r(W)`` when ``pen = 0``.
    """
    if pen == 0.0:
        return p.r(W)
    lw = np.log(W)
    return (
        p.r0
        + p.r1 * (W + 2 * pen * lw - pen**2 / W)
        + 2 * p.r2 * (W**2 / 2 + 3 * pen * W + 3 * pen**2 * lw - pen**3 / W)
    )


def _group_terms(p: TrainParams, g: _Group, dt: float, form: str = "rate"):
    """Group objective and its first two derivatives with respect to dt."""
    D = g.lengths.sum()
    W = D / dt
    if form == "rate":
        obj = sum(rate_cost(p, W, pj) * dx for pj, dx in zip(g.penalties, g.lengths))
        psi = np.array([p.psi(W + pj) for pj in g.penalties])
        dpsi = np.array([p.dpsi(W + pj) for pj in g.penalties])
        d1 = -float(np.dot(psi, g.lengths)) / D
        d2 = float(np.dot(dpsi, g.lengths)) / D * W / dt
    else:
        s = W + g.penalties
        r = np.array([p.r(v) for v in s])
        dr = np.array([p.dr(v) for v in s])
        d2r = np.array([p.d2r(v) for v in s])
        obj = float(np.dot(r, g.lengths))
        d1 = -float(np.dot(dr, g.lengths)) * W / dt
        d2 = float(np.dot(d2r * (W / dt) ** 2 + dr * 2.0 * W / dt**2, g.lengths))
    return obj, d1, d2


def _check(problem: CsProblem, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (problem.n_unknowns,):
        raise ValueError(f"expected {problem.n_unknowns} unknowns, got shape {h.shape}")
    dts = np.array([_dt(g, h) for g in problem.groups])
    bad = np.flatnonzero(dts <= 0)
    if len(bad):
        g = problem.groups[bad[0]]
        raise NonpositiveSectionTime(
            f"train {problem.table.trains[g.train]}: running time {dts[bad[0]]:.3f} s "
            f"on {problem.table.signals[g.a]}-{problem.table.signals[g.b]}"
        )
    return dts


def cs_cost(problem: CsProblem, h: Sequence[float]) -> float:
    """Fleet tractive energy per unit mass, ``sum r(W) dx``, without penalties."""
    dts = _check(problem, h)
    return sum(problem.trains[g.train].r(g.lengths.sum() / dt) * g.lengths.sum() for g, dt in zip(problem.groups, dts))


def cs_objective(problem: CsProblem, h: Sequence[float]) -> float:
    """Penalised objective minimised by ``cs_solve``; equals ``cs_cost`` without penalties."""
    dts = _check(problem, h)
    return sum(
        _group_terms(problem.trains[g.train], g, dt, problem.penalty_form)[0] for g, dt in zip(problem.groups, dts)
    )


def cs_gradient(problem: CsProblem, h: Sequence[float]) -> np.ndarray:
    dts = _check(problem, h)
    grad = np.zeros(problem.n_unknowns)
    for g, dt in zip(problem.groups, dts):
        d1 = _group_terms(problem.trains[g.train], g, dt, problem.penalty_form)[1]
        if g.kb is not None:
            grad[g.kb] += d1
        if g.ka is not None:
            grad[g.ka] -= d1
    return grad


def cs_hessian(problem: CsProblem, h: Sequence[float]) -> np.ndarray:
    dts = _check(problem, h)
    nk = problem.n_unknowns
    H = np.zeros((nk, nk))
    for g, dt in zip(problem.groups, dts):
        d2 = _group_terms(problem.trains[g.train], g, dt, problem.penalty_form)[2]
        idx = [(g.kb, 1.0), (g.ka, -1.0)]
        for k1, s1 in idx:
            if k1 is None:
                continue
            for k2, s2 in idx:
                if k2 is not None:
                    H[k1, k2] += s1 * s2 * d2
    return H


def section_speeds(problem: CsProblem, h: Sequence[float]) -> np.ndarray:
    """m x n grid of constant speeds, each section taking its group's speed."""
    dts = _check(problem, h)
    W = np.full((problem.table.m, problem.table.n), np.nan)
    for g, dt in zip(problem.groups, dts):
        W[g.train, g.a : g.b] = g.lengths.sum() / dt
    return W


def full_times(problem: CsProblem, h: Sequence[float]) -> np.ndarray:
    """Timed cells plus pass-through times at untimed signals.

    Inside a group the train runs at the group speed and stands for its
    dwell at every stop, so an untimed cell gets the time it leaves there.
    """
    times = evaluate(problem.table, h)
    W = section_speeds(problem, h)
    x = problem.positions
    for g in problem.groups:
        i = g.train
        t = times[i, g.a]
        for j in range(g.a + 1, g.b):
            t += (x[j] - x[j - 1]) / W[i, j - 1] + problem.table.dwell[i, j]
            times[i, j] = t
    return times


def uniform_start(problem: CsProblem) -> np.ndarray:
    """Initial h from each train running at one speed between its fixed end times.

    When several cells reference the same unknown their implied values are
    averaged.
    """
    table = problem.table
    x = problem.positions
    acc = np.zeros(problem.n_unknowns)
    cnt = np.zeros(problem.n_unknowns)
    for i, row in enumerate(table.entries):
        first, last = row[0], row[-1]
        if not (first.is_fixed and last.is_fixed):
            continue
        total_dwell = table.dwell[i, 1:-1].sum()
        W = (x[-1] - x[0]) / (last.c - first.c - total_dwell)
        t = first.c
        for j in range(1, table.n + 1):
            t += (x[j] - x[j - 1]) / W + (table.dwell[i, j] if j < table.n else 0.0)
            e = row[j]
            if e is not None and e.k is not None:
                acc[e.k - 1] += t - e.c
                cnt[e.k - 1] += 1
    if np.any(cnt == 0):
        raise ValueError("some unknowns are only referenced by trains without fixed end times")
    return acc / cnt


def cs_solve(problem: CsProblem, h0: Sequence[float] | None = None, tol: float = GRAD_TOL) -> CsSolution:
    """Newton iteration on the gradient with a halving feasibility/descent guard."""
    h = uniform_start(problem) if h0 is None else np.array(h0, dtype=float)
    obj = cs_objective(problem, h)
    for it in range(MAX_ITER + 1):
        g = cs_gradient(problem, h)
        gn = float(np.max(np.abs(g))) if len(g) else 0.0
        if gn < tol:
            return CsSolution(
                h, section_speeds(problem, h), cs_cost(problem, h), obj, gn, it, full_times(problem, h)
            )
        if it == MAX_ITER:
            break
        H = cs_hessian(problem, h)
        try:
            L = np.linalg.cholesky(H)
        except np.linalg.LinAlgError as exc:
            raise Diverged(f"Hessian not positive definite at iteration {it}") from exc
        step = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        lam = 1.0
        while True:
            trial = h + lam * step
            try:
                o_new = cs_objective(problem, trial)
            except NonpositiveSectionTime:
                o_new = None
            if o_new is not None and o_new <= obj + 1e-12 * abs(obj):
                break
            lam *= 0.5
            if lam < 1e-12:
                if o_new is None:
                    raise InfeasibleIterate(f"no feasible step at iteration {it}")
                raise Diverged(f"line search stalled at iteration {it} (gradient {gn:.3e})")
        h, obj = trial, o_new
    raise Diverged(f"gradient norm {gn:.3e} after {MAX_ITER} iterations")


# --- separation repair by delaying departures ----------------------------------

def delay_to_separate(times: np.ndarray, cycle: float | None = None, buffers=0.0) -> tuple[np.ndarray, np.ndarray]:
    """Delay each train (in order) just enough to follow its predecessor safely.

    Returns the shifted grid (including the wrap-around repeat of train 1 as
    the last row when ``cycle`` is given) and the delay applied to each row.
    """
    grid = np.asarray(times, dtype=float)
    if cycle is not None:
        grid = np.vstack([grid, grid[:1] + cycle])
    grid = grid.copy()
    m, width = grid.shape
    buf = np.broadcast_to(np.asarray(buffers, dtype=float), (m - 1,))
    delays = np.zeros(m)
    for i in range(1, m):
        lead, follow = grid[i - 1], grid[i]
        need = 0.0
        for j in range(1, width - 1):
            a, b = lead[j + 1], follow[j - 1]
            if not (np.isnan(a) or np.isnan(b)):
                need = max(need, a + buf[i - 1] - b)
        delays[i] = need
        grid[i] = follow + need
    return grid, delays
