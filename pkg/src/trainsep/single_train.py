"""Strategies of optimal type for one train between two stops.

A segment runs from rest at ``x[0]`` to rest at ``x[-1]`` with a prescribed
running time on every timed section ``(x[j], x[j+1])``. Each section has a
driving speed; neighbouring sections are joined by a full-traction or coast
transition through the signal, and the final section either holds speed and
then coasts to the optimal brake-entry speed (*held*) or peaks, coasts and
brakes with no hold at all (*unheld*). Long-haul and rapid-transit journeys
are the one-section special cases.

All unknown speeds come out of one Newton system per candidate structure.
Jacobians of the phase integrals follow from the Leibniz rule: a limit ``s``
of a phase integral inside a section held at ``V`` moves the section time by
``rate(s) * (1 - s/V)`` per unit of ``s``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import quadrature as q
from .dynamics import TrainParams, psi_dagger, u_b, u_s
from .errors import (
    Diverged,
    Infeasible,
    ModeCycling,
    NearSingular,
    NotLongHaul,
    OutOfRange,
    TrainSepError,
)
from .quadrature import PhaseKind

NEWTON_TOL = 1e-9
NEWTON_ACCEPT = 1e-7
MAX_NEWTON = 50
MAX_SWEEPS = 10
HOLD_TOL = -1e-6  # hold lengths above this count as non-negative (m)
VSUP_SEED_GAP = 0.5


@dataclass(frozen=True)
class SegmentSpec:
    """Stop-to-stop journey with prescribed running time on each section."""

    boundaries: tuple[float, ...]
    times: tuple[float, ...]

    def __post_init__(self):
        x = np.asarray(self.boundaries, dtype=float)
        t = np.asarray(self.times, dtype=float)
        if x.ndim != 1 or len(x) < 2:
            raise ValueError("need at least two boundaries")
        if len(t) != len(x):
            raise ValueError("one prescribed time per boundary")
        if np.any(np.diff(x) <= 0):
            raise ValueError("boundaries must be strictly increasing")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "boundaries", tuple(float(v) for v in x))
        object.__setattr__(self, "times", tuple(float(v) for v in t))

    @classmethod
    def from_sections(cls, lengths: Sequence[float], durations: Sequence[float], x0=0.0, t0=0.0):
        x = np.concatenate([[x0], x0 + np.cumsum(lengths)])
        t = np.concatenate([[t0], t0 + np.cumsum(durations)])
        return cls(tuple(x), tuple(t))

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def n_sections(self) -> int:
        return len(self.boundaries) - 1


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    v_start: float
    v_end: float
    x_start: float
    x_end: float
    t_start: float
    t_end: float


@dataclass(frozen=True)
class StrategyCost:
    joules_per_kg: float


@dataclass
class Strategy:
    """Solved strategy of optimal type for one segment.

    ``driving_speeds[j]`` is the hold speed of section ``j``; for an unheld
    final section it is the virtual speed whose psi equals the psi-dagger
    rate, and ``v_max`` holds the actual peak speed. ``boundary_speeds`` are
    the speeds at the interior signals. ``hold_lengths[-1]`` is zero for an
    unheld final section.
    """

    params: TrainParams
    spec: SegmentSpec
    driving_speeds: np.ndarray
    boundary_speeds: np.ndarray
    hold_lengths: np.ndarray
    final_held: bool
    v_max: float
    brake_speed: float
    transitions: tuple[PhaseKind, ...]
    phases: list[Phase] = field(default_factory=list)
    cost: float = 0.0
    iterations: int = 0

    @property
    def kind(self) -> str:
        return "held" if self.final_held else "unheld"

    @property
    def psi_entries(self) -> np.ndarray:
        """Marginal cost rates per section; the unheld final section uses psi-dagger."""
        p = self.params
        out = np.array([p.psi(v) for v in self.driving_speeds])
        if not self.final_held:
            out[-1] = psi_dagger(p, self.v_max, self.brake_speed)
        return out

    def section_times(self) -> np.ndarray:
        x = np.asarray(self.spec.boundaries)
        t = np.empty(len(x))
        t[0] = self.phases[0].t_start if self.phases else self.spec.times[0]
        k = 0
        for i in range(1, len(x)):
            while k < len(self.phases) and self.phases[k].x_end <= x[i] + 1e-6:
                k += 1
            t[i] = self.phases[k - 1].t_end
        return t

    def total_distance(self) -> float:
        return sum(ph.x_end - ph.x_start for ph in self.phases)


# --- speed laws with gradients -------------------------------------------

class _Speed:
    """A speed value together with its gradient w.r.t. the unknown vector."""

    __slots__ = ("val", "grad")

    def __init__(self, val, grad):
        self.val = val
        self.grad = grad


def _unit(nz, k, val):
    g = np.zeros(nz)
    g[k] = 1.0
    return _Speed(val, g)


def _u_s_grad(p: TrainParams, v: _Speed, w: _Speed) -> _Speed:
    a, b = v.val, w.val
    if abs(a - b) < 1e-7:
        return _Speed(u_s(p, a, b), 0.5 * (v.grad + w.grad))
    num = p.psi(a) - p.psi(b)
    den = p.dphi(a) - p.dphi(b)
    da = (p.dpsi(a) * den - num * p.d2phi(a)) / den**2
    db = (-p.dpsi(b) * den + num * p.d2phi(b)) / den**2
    return _Speed(num / den, da * v.grad + db * w.grad)


def _u_b_grad(p: TrainParams, v: _Speed) -> _Speed:
    a = v.val
    d1 = p.dphi(a)
    val = p.psi(a) / d1
    der = (p.dpsi(a) * d1 - p.psi(a) * p.d2phi(a)) / d1**2
    return _Speed(val, der * v.grad)


def _usd_raw(p: TrainParams, u, v, w):
    rate = p.phi(w) / (w - u)
    return (rate * u - p.psi(v)) / (rate - p.dphi(v))


def _u_s_dagger_grad(p: TrainParams, u: _Speed, v: _Speed, w: _Speed) -> _Speed:
    # closed-form speed law; central differences are exact to ~1e-10 here
    val = _usd_raw(p, u.val, v.val, w.val)
    grad = np.zeros_like(u.grad)
    for s, args in ((u, 0), (v, 1), (w, 2)):
        h = 1e-6 * max(1.0, abs(s.val))
        xp = [u.val, v.val, w.val]
        xm = list(xp)
        xp[args] += h
        xm[args] -= h
        d = (_usd_raw(p, *xp) - _usd_raw(p, *xm)) / (2 * h)
        grad = grad + d * s.grad
    return _Speed(val, grad)


# --- phase pieces ------------------------------------------------------------

class _Piece:
    """One regular phase between two speeds, with its moving-limit terms."""

    __slots__ = ("kind", "v_from", "v_to", "time", "dist", "work", "limits")

    def __init__(self, p: TrainParams, kind: PhaseKind, v_from: _Speed, v_to: _Speed | None):
        self.kind = kind
        self.v_from = v_from
        self.v_to = v_to
        a = v_from.val
        if kind is PhaseKind.ACCELERATE:
            b = v_to.val
            self.time = q.accel_time(p, a, b)
            self.dist = q.accel_dist(p, a, b)
            self.work = q.accel_work(p, a, b)
            self.limits = [(v_to, 1.0, q.accel_rate(p, b)), (v_from, -1.0, q.accel_rate(p, a))]
        elif kind is PhaseKind.COAST:
            b = v_to.val
            self.time = q.coast_time(p, a, b)
            self.dist = q.coast_dist(p, a, b)
            self.work = 0.0
            self.limits = [(v_from, 1.0, q.coast_rate(p, a)), (v_to, -1.0, q.coast_rate(p, b))]
        elif kind is PhaseKind.BRAKE:
            self.time = q.brake_time(p, a)
            self.dist = q.brake_dist(p, a)
            self.work = 0.0
            self.limits = [(v_from, 1.0, q.brake_rate(p, a))]
        else:
            raise ValueError(kind)

    def v_end(self):
        return self.v_to.val if self.v_to is not None else 0.0


def _transition(p, accelerate: bool, v_from: _Speed, v_to: _Speed) -> _Piece:
    kind = PhaseKind.ACCELERATE if accelerate else PhaseKind.COAST
    return _Piece(p, kind, v_from, v_to)


class _SectionEval:
    __slots__ = ("pieces_in", "hold", "pieces_out", "xi", "time", "d_time", "d_dist")


class _Model:
    """Residual system for a fixed structure (held/unheld, transition modes)."""

    def __init__(self, p: TrainParams, spec: SegmentSpec, held: bool, modes: Sequence[bool]):
        self.p = p
        self.lengths = spec.lengths
        self.durations = spec.durations
        self.n = spec.n_sections
        self.held = held
        self.modes = list(modes)
        self.nz = self.n if held else self.n + 1

    def valid(self, z) -> bool:
        vs = self.p.v_sup - 2 * q.VSUP_MARGIN
        if not np.all(np.isfinite(z)):
            return False
        if np.any(z <= 0):
            return False
        if self.held:
            return bool(np.all(z < vs))
        v, vmax, un = z[: self.n - 1], z[self.n - 1], z[self.n]
        if np.any(v >= vs) or vmax >= vs or un >= vmax:
            return False
        return True

    def speeds(self, z):
        p, n, nz = self.p, self.n, self.nz
        if self.held:
            V = [_unit(nz, j, z[j]) for j in range(n)]
            U = [_u_s_grad(p, V[j], V[j + 1]) for j in range(n - 1)]
            return V, U, None, _u_b_grad(p, V[-1])
        V = [_unit(nz, j, z[j]) for j in range(n - 1)]
        vmax = _unit(nz, n - 1, z[n - 1])
        un = _unit(nz, n, z[n])
        U = [_u_s_grad(p, V[j], V[j + 1]) for j in range(n - 2)]
        if n >= 2:
            U.append(_u_s_dagger_grad(p, un, V[n - 2], vmax))
        return V, U, vmax, un

    def evaluate(self, z):
        """Residuals, Jacobian and the per-section breakdown."""
        p, n, nz = self.p, self.n, self.nz
        V, U, vmax, un = self.speeds(z)
        zero = _Speed(0.0, np.zeros(nz))
        R = np.zeros(nz)
        J = np.zeros((nz, nz))
        sections = []
        n_held = n if self.held else n - 1
        for j in range(n):
            s = _SectionEval()
            entry = zero if j == 0 else U[j - 1]
            if j < n_held:
                Vj = V[j]
                acc_in = True if j == 0 else self.modes[j - 1]
                s.pieces_in = [_transition(p, acc_in, entry, Vj)]
                if j < n - 1:
                    s.pieces_out = [_transition(p, self.modes[j], Vj, U[j])]
                else:
                    s.pieces_out = [_Piece(p, PhaseKind.COAST, Vj, un), _Piece(p, PhaseKind.BRAKE, un, None)]
                pieces = s.pieces_in + s.pieces_out
                dist = sum(pc.dist for pc in pieces)
                s.xi = self.lengths[j] - dist
                s.time = sum(pc.time for pc in pieces) + s.xi / Vj.val
                g = -s.xi / Vj.val**2 * Vj.grad
                for pc in pieces:
                    for spd, sign, rate in pc.limits:
                        g = g + sign * rate * (1.0 - spd.val / Vj.val) * spd.grad
                R[j] = (s.time - self.durations[j])
                J[j] = g
            else:
                # unheld final section: peak, coast, brake
                s.pieces_in = [
                    _Piece(p, PhaseKind.ACCELERATE, entry, vmax),
                    _Piece(p, PhaseKind.COAST, vmax, un),
                    _Piece(p, PhaseKind.BRAKE, un, None),
                ]
                s.pieces_out = []
                s.xi = 0.0
                s.time = sum(pc.time for pc in s.pieces_in)
                dist = sum(pc.dist for pc in s.pieces_in)
                gt = np.zeros(nz)
                gx = np.zeros(nz)
                for pc in s.pieces_in:
                    for spd, sign, rate in pc.limits:
                        gt = gt + sign * rate * spd.grad
                        gx = gx + sign * rate * spd.val * spd.grad
                scale = vmax.val
                R[j] = s.time - self.durations[j]
                J[j] = gt
                R[n] = (dist - self.lengths[j]) / scale
                J[n] = gx / scale
            s.hold = None
            sections.append(s)
        return R, J, (V, U, vmax, un, sections)


def _newton(model: _Model, z0: np.ndarray):
    z = np.array(z0, dtype=float)
    if not model.valid(z):
        raise Diverged("initial point outside the admissible speed range")
    R, J, extra = model.evaluate(z)
    norm = np.max(np.abs(R))
    for it in range(1, MAX_NEWTON + 1):
        if norm < NEWTON_TOL:
            return z, extra, it - 1
        try:
            dz = np.linalg.solve(J, -R)
        except np.linalg.LinAlgError as exc:
            raise Diverged(f"singular Jacobian: {exc}") from exc
        lam = 1.0
        accepted = False
        while lam > 1e-8:
            zn = z + lam * dz
            if model.valid(zn):
                try:
                    Rn, Jn, extra_n = model.evaluate(zn)
                except (NearSingular, OutOfRange, ValueError, ZeroDivisionError):
                    Rn = None
                if Rn is not None and np.all(np.isfinite(Rn)):
                    nn = np.max(np.abs(Rn))
                    if nn < norm or nn < NEWTON_TOL:
                        accepted = True
                        break
            lam *= 0.5
        if not accepted:
            if norm < NEWTON_ACCEPT:
                return z, extra, it
            raise Diverged(f"line search failed at residual {norm:.3e}")
        step = np.max(np.abs(zn - z))
        z, R, J, extra, norm = zn, Rn, Jn, extra_n, nn
        if step < 1e-13 * max(1.0, np.max(np.abs(z))) and norm < NEWTON_ACCEPT:
            return z, extra, it
    if norm < NEWTON_ACCEPT:
        return z, extra, MAX_NEWTON
    raise Diverged(f"no convergence after {MAX_NEWTON} iterations (residual {norm:.3e})")


# --- assembling strategies ---------------------------------------------------

def _build_strategy(p: TrainParams, spec: SegmentSpec, model: _Model, z, extra, iters) -> Strategy:
    V, U, vmax, un, sections = extra
    n = model.n
    x0 = spec.boundaries[0]
    t = spec.times[0]
    x = x0
    phases: list[Phase] = []
    cost = 0.0
    holds = np.zeros(n)
    drive = np.zeros(n)

    def add(kind, va, vb, dx, dt):
        nonlocal x, t
        phases.append(Phase(kind, va, vb, x, x + dx, t, t + dt))
        x += dx
        t += dt

    for j, s in enumerate(sections):
        for pc in s.pieces_in:
            add(pc.kind, pc.v_from.val, pc.v_end(), pc.dist, pc.time)
            cost += pc.work
        if s.pieces_out or model.held:
            vj = V[j].val
            drive[j] = vj
            holds[j] = s.xi
            if s.xi != 0.0:
                add(PhaseKind.HOLD, vj, vj, s.xi, s.xi / vj)
            cost += p.r(vj) * s.xi
            for pc in s.pieces_out:
                add(pc.kind, pc.v_from.val, pc.v_end(), pc.dist, pc.time)
                cost += pc.work
    if not model.held:
        from .dynamics import virtual_driving_speed

        drive[-1] = virtual_driving_speed(p, vmax.val, un.val)
    if model.held:
        v_peak = max(drive)
    else:
        v_peak = vmax.val
    trans = tuple(PhaseKind.ACCELERATE if m else PhaseKind.COAST for m in model.modes)
    return Strategy(
        params=p,
        spec=spec,
        driving_speeds=drive,
        boundary_speeds=np.array([u.val for u in U]),
        hold_lengths=holds,
        final_held=model.held,
        v_max=v_peak if model.held else vmax.val,
        brake_speed=un.val,
        transitions=trans,
        phases=phases,
        cost=cost,
        iterations=iters,
    )


def _modes_from(speeds) -> list[bool]:
    return [bool(speeds[j + 1] > speeds[j]) for j in range(len(speeds) - 1)]


def _seed_held(p: TrainParams, spec: SegmentSpec) -> np.ndarray:
    w = spec.lengths / spec.durations
    return np.minimum(w, p.v_sup - VSUP_SEED_GAP)


def _seed_unheld(p: TrainParams, spec: SegmentSpec, v_prev=None) -> np.ndarray:
    w = spec.lengths / spec.durations
    n = spec.n_sections
    vmax = min(1.2 * max(w), p.v_sup - VSUP_SEED_GAP)
    un = 0.5 * (u_b(p, vmax) + vmax)
    z = np.empty(n + 1)
    z[: n - 1] = w[: n - 1] if v_prev is None else v_prev
    z[n - 1] = vmax
    z[n] = un
    return z


def _solve_structure(p, spec, held: bool, z0, modes):
    """Progressive mode repair: re-solve until modes match the V ordering."""
    n = spec.n_sections
    seen = set()
    z = z0
    for _ in range(MAX_SWEEPS):
        if not held and n >= 2:
            modes = list(modes[:-1]) + [True]
        model = _Model(p, spec, held, modes)
        z, extra, iters = _newton(model, z)
        V = z[:n] if held else z[: n - 1]
        new = _modes_from(V)
        if not held and n >= 2:
            new = new + [True]
        if new == list(modes):
            return model, z, extra, iters
        key = tuple(new)
        if key in seen:
            break
        seen.add(tuple(modes))
        modes = new
    raise ModeCycling(f"transition modes did not settle after {MAX_SWEEPS} sweeps")


def _check_feasible(p: TrainParams, spec: SegmentSpec) -> None:
    cap = p.v_sup - 2 * q.VSUP_MARGIN
    for j, (dx, dt) in enumerate(zip(spec.lengths, spec.durations)):
        # no section can be covered faster than at the balancing speed
        if dt <= dx / cap:
            raise Infeasible(f"section {j}: {dt:.3f} s is below the minimum running time")
    total = spec.times[-1] - spec.times[0]
    if total <= min_journey_time(p, spec.boundaries[-1] - spec.boundaries[0]):
        raise Infeasible(f"segment time {total:.3f} s is below the minimum journey time")


def solve_timed_sections(params: TrainParams, spec: SegmentSpec, modes: Sequence[bool] | None = None) -> Strategy:
    """Optimal strategy for a stop-to-stop segment with timed interior signals.

    Tries the held final section first and switches to the unheld form when
    the final hold length would be negative or the held system has no
    admissible solution.
    """
    _check_feasible(params, spec)
    n = spec.n_sections
    w = spec.lengths / spec.durations
    init_modes = list(modes) if modes is not None else _modes_from(w)
    held_err: Exception | None = None
    v_prev = None
    try:
        model, z, extra, iters = _solve_structure(params, spec, True, _seed_held(params, spec), init_modes)
        strat = _build_strategy(params, spec, model, z, extra, iters)
        if np.all(strat.hold_lengths[:-1] >= HOLD_TOL) and strat.hold_lengths[-1] >= HOLD_TOL:
            return strat
        if np.any(strat.hold_lengths[:-1] < HOLD_TOL) and strat.hold_lengths[-1] >= HOLD_TOL:
            raise Infeasible(f"negative hold length on an interior section: {strat.hold_lengths}")
        v_prev = z[: n - 1]
    except (Diverged, ModeCycling) as exc:
        held_err = exc
    try:
        model, z, extra, iters = _solve_structure(
            params, spec, False, _seed_unheld(params, spec, v_prev), init_modes
        )
    except (Diverged, ModeCycling) as exc:
        if held_err is not None:
            raise Diverged(f"held: {held_err}; unheld: {exc}") from exc
        raise
    strat = _build_strategy(params, spec, model, z, extra, iters)
    if np.any(strat.hold_lengths[:-1] < HOLD_TOL):
        raise Infeasible(f"negative hold length on an interior section: {strat.hold_lengths}")
    return strat


# --- single-section journeys ---------------------------------------------------

def min_journey_time(params: TrainParams, X: float) -> float:
    """Shortest time over distance ``X`` from rest to rest."""
    if X <= 0:
        raise ValueError("distance must be positive")
    cap = params.v_sup - 2 * q.VSUP_MARGIN

    def dist(v):
        return q.accel_dist(params, 0.0, v) + q.brake_dist(params, v)

    if dist(cap) <= X:
        return q.accel_time(params, 0.0, cap) + q.brake_time(params, cap) + (X - dist(cap)) / cap
    from scipy.optimize import brentq

    v = brentq(lambda s: dist(s) - X, 0.0, cap, xtol=1e-12)
    return q.accel_time(params, 0.0, v) + q.brake_time(params, v)


def _single(X: float, T: float) -> SegmentSpec:
    return SegmentSpec((0.0, float(X)), (0.0, float(T)))


def solve_long_haul(params: TrainParams, X: float, T: float) -> Strategy:
    spec = _single(X, T)
    if T <= min_journey_time(params, X):
        raise Infeasible(f"T={T} is below the minimum journey time")
    model = _Model(params, spec, True, [])
    try:
        z, extra, iters = _newton(model, _seed_held(params, spec))
    except Diverged as exc:
        # no admissible hold speed at all: the journey is too tight for a hold
        raise NotLongHaul(f"no hold speed meets T={T}: {exc}") from exc
    strat = _build_strategy(params, spec, model, z, extra, iters)
    if strat.hold_lengths[0] < HOLD_TOL:
        raise NotLongHaul(f"hold length {strat.hold_lengths[0]:.3f} m is negative")
    return strat


def solve_rapid_transit(params: TrainParams, X: float, T: float) -> Strategy:
    spec = _single(X, T)
    if T <= min_journey_time(params, X):
        raise Infeasible(f"T={T} is below the minimum journey time")
    model = _Model(params, spec, False, [])
    z, extra, iters = _newton(model, _seed_unheld(params, spec))
    return _build_strategy(params, spec, model, z, extra, iters)


def is_rapid_transit_optimal(strategy: Strategy) -> bool:
    """Unheld strategies are optimal only above the optimal brake-entry speed."""
    return (not strategy.final_held) and strategy.brake_speed > u_b(strategy.params, strategy.v_max)


def strategy_cost(params: TrainParams, s: Strategy) -> StrategyCost:
    """Tractive energy per unit mass: full-traction work plus hold work."""
    total = 0.0
    for ph in s.phases:
        if ph.kind is PhaseKind.ACCELERATE:
            total += q.accel_work(params, ph.v_start, ph.v_end)
        elif ph.kind is PhaseKind.HOLD:
            total += params.r(ph.v_start) * (ph.x_end - ph.x_start)
    return StrategyCost(total)


def speed_profile(strategy: Strategy, spacing: float = 10.0, per_phase: int = 400, with_phase: bool = False):
    """Sample ``(x, v, t)`` along the strategy with at most ``spacing`` metres between points.

    With ``with_phase`` a fourth array gives the phase name of each sample
    (the phase a sample ends, for points on a boundary).
    """
    p = strategy.params
    xs, vs, ts, ks = [], [], [], []
    for ph in strategy.phases:
        length = ph.x_end - ph.x_start
        if length <= 0:
            continue
        m = max(2, int(math.ceil(length / spacing)) + 1)
        xg = np.linspace(ph.x_start, ph.x_end, m)
        if ph.kind is PhaseKind.HOLD:
            vg = np.full(m, ph.v_start)
            tg = ph.t_start + (xg - ph.x_start) / ph.v_start
        else:
            # tabulate x(v), t(v) on a speed grid and invert by interpolation
            vgrid = np.linspace(ph.v_start, ph.v_end, per_phase)
            dx = np.empty(per_phase - 1)
            dt = np.empty(per_phase - 1)
            for k in range(per_phase - 1):
                a, b = vgrid[k], vgrid[k + 1]
                if ph.kind is PhaseKind.ACCELERATE:
                    dx[k], dt[k] = q.accel_dist(p, a, b), q.accel_time(p, a, b)
                elif ph.kind is PhaseKind.COAST:
                    dx[k], dt[k] = q.coast_dist(p, a, b), q.coast_time(p, a, b)
                else:
                    dx[k] = q.brake_dist(p, a) - q.brake_dist(p, b)
                    dt[k] = q.brake_time(p, a) - q.brake_time(p, b)
            xc = ph.x_start + np.concatenate([[0.0], np.cumsum(dx)])
            tc = ph.t_start + np.concatenate([[0.0], np.cumsum(dt)])
            vg = np.interp(xg, xc, vgrid)
            tg = np.interp(xg, xc, tc)
        if xs:
            xg, vg, tg = xg[1:], vg[1:], tg[1:]
        xs.append(xg)
        vs.append(vg)
        ts.append(tg)
        ks.append(np.full(len(xg), ph.kind.value, dtype=object))
    out = np.concatenate(xs), np.concatenate(vs), np.concatenate(ts)
    if with_phase:
        ks[0][0] = strategy.phases[0].kind.value
        return out + (np.concatenate(ks),)
    return out


def write_profile_csv(strategy: Strategy, path, spacing: float = 10.0) -> None:
    x, v, t, phase = speed_profile(strategy, spacing, with_phase=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_m", "v_mps", "t_s", "phase"])
        for row in zip(x, v, t, phase):
            w.writerow([f"{row[0]:.6f}", f"{row[1]:.6f}", f"{row[2]:.6f}", row[3]])
