"""Performance functions of a point-mass train on level track.

All quantities are per unit mass, so forces are accelerations (m/s^2).
Traction and brake bounds use the min-envelope: a constant plateau at low
speed and a power-limited hyperbola above the breakpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from functools import cached_property

from scipy.optimize import brentq

from .errors import NoRoot, OutOfRange

DEGENERATE_TOL = 1e-7
VSUP_BRACKET_HI = 200.0


@dataclass(frozen=True)
class TrainParams:
    """Traction, brake and Davis-resistance coefficients for one train."""

    p0: float
    p1: float
    q0: float
    q1: float
    r0: float
    r1: float
    r2: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValueError(f"{f.name} must be finite")
            if f.name == "r1":
                if value < 0:
                    raise ValueError("r1 must be non-negative")
            elif value <= 0:
                raise ValueError(f"{f.name} must be positive")

    # traction / brake envelopes
    def H(self, v: float) -> float:
        if v <= 0.0:
            return self.p0
        return min(self.p0, self.p1 / v)

    def K(self, v: float) -> float:
        if v <= 0.0:
            return self.q0
        return min(self.q0, self.q1 / v)

    @property
    def traction_break(self) -> float:
        return self.p1 / self.p0

    @property
    def brake_break(self) -> float:
        return self.q1 / self.q0

    # resistance and its derived functions
    def r(self, v: float) -> float:
        return self.r0 + v * (self.r1 + self.r2 * v)

    def dr(self, v: float) -> float:
        return self.r1 + 2.0 * self.r2 * v

    def d2r(self, v: float) -> float:
        return 2.0 * self.r2

    def phi(self, v: float) -> float:
        return v * self.r(v)

    def dphi(self, v: float) -> float:
        return self.r(v) + v * self.dr(v)

    def d2phi(self, v: float) -> float:
        return 2.0 * self.dr(v) + v * self.d2r(v)

    def psi(self, v: float) -> float:
        return v * v * self.dr(v)

    def dpsi(self, v: float) -> float:
        return 2.0 * v * self.dr(v) + v * v * self.d2r(v)

    @cached_property
    def v_sup(self) -> float:
        return v_sup(self)

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# Class 385 EMU used throughout the Glasgow-Edinburgh case studies.
REFERENCE_TRAIN = TrainParams(p0=0.84, p1=9.10, q0=1.00, q1=10.83, r0=0.12, r1=0.0001, r2=0.00004)
# Lighter alternative train with lower static resistance.
ALTERNATIVE_TRAIN = TrainParams(p0=1.00, p1=7.00, q0=1.5, q1=9.00, r0=0.070, r1=0.0, r2=0.00005)


def traction_bound(params: TrainParams, v: float) -> float:
    if v < 0:
        raise ValueError("speed must be non-negative")
    return params.H(v)


def brake_bound(params: TrainParams, v: float) -> float:
    if v < 0:
        raise ValueError("speed must be non-negative")
    return params.K(v)


def resistance(params: TrainParams, v: float) -> float:
    if v < 0:
        raise ValueError("speed must be non-negative")
    return params.r(v)


def v_sup(params: TrainParams) -> float:
    """Balancing speed where full traction equals resistance."""

    def f(v):
        return params.H(v) - params.r(v)

    lo = params.traction_break
    if f(lo) <= 0.0:
        # balancing speed lies on the traction plateau
        lo = 0.0
        if f(lo) <= 0.0:
            raise NoRoot("static resistance exceeds maximum traction")
    if f(VSUP_BRACKET_HI) >= 0.0:
        raise NoRoot(f"traction exceeds resistance up to {VSUP_BRACKET_HI} m/s")
    return brentq(f, lo, VSUP_BRACKET_HI, xtol=1e-13, maxiter=200)


def u_b(params: TrainParams, v: float) -> float:
    """Optimal brake-entry speed after a speedhold at ``v``."""
    if v <= 0:
        raise ValueError("speed must be positive")
    return params.psi(v) / params.dphi(v)


def u_s(params: TrainParams, v: float, w: float) -> float:
    """Optimal speed at a timed signal between holds at ``v`` and ``w``.

    As ``w -> v`` the quotient tends to psi'(v)/phi''(v), which equals ``v``.
    """
    if v <= 0 or w <= 0:
        raise ValueError("speeds must be positive")
    if abs(v - w) < DEGENERATE_TOL:
        return params.dpsi(v) / params.d2phi(v)
    return (params.psi(v) - params.psi(w)) / (params.dphi(v) - params.dphi(w))


def psi_dagger(params: TrainParams, v_max: float, u: float) -> float:
    """Marginal cost rate of a final section with no speedhold phase."""
    return params.phi(v_max) * u / (v_max - u)


def u_s_dagger(params: TrainParams, u: float, v: float, w: float) -> float:
    """Signal speed entering a final section that has no speedhold.

    ``u`` is the brake-entry speed of the final section, ``v`` the hold
    speed before the signal and ``w`` the peak speed of the final section.
    """
    if v <= 0 or w <= 0:
        raise ValueError("speeds must be positive")
    lo = u_b(params, w)
    if u < lo - 1e-12 * max(1.0, lo) or u >= w:
        raise OutOfRange(f"u={u} outside [u_b(w)={lo}, w={w})")
    rate = params.phi(w) / (w - u)
    return (rate * u - params.psi(v)) / (rate - params.dphi(v))


def virtual_driving_speed(params: TrainParams, v_max: float, u: float) -> float:
    """Speed whose psi equals the psi-dagger rate of an unheld section."""
    target = psi_dagger(params, v_max, u)

    def f(v):
        return params.psi(v) - target

    hi = max(v_max, 1.0)
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise NoRoot("psi never reaches the psi-dagger rate")
    return brentq(f, 0.0, hi, xtol=1e-12)
