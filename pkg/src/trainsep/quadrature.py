"""Time, distance and work integrals of the regular control phases.

Every phase integral is taken over speed, between two speeds. Integration
intervals are split at the traction and brake envelope breakpoints so the
quadrature never straddles a kink in the integrand.
"""

from __future__ import annotations

from enum import Enum

from scipy.integrate import quad

from .dynamics import TrainParams
from .errors import NearSingular

ABS_TOL = 1e-10
REL_TOL = 1e-12
VSUP_MARGIN = 1e-6


class PhaseKind(str, Enum):
    ACCELERATE = "accelerate"
    COAST = "coast"
    BRAKE = "brake"
    HOLD = "hold"


def _integrate(f, a: float, b: float, breaks=()) -> float:
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    pts = [a] + sorted(x for x in breaks if a < x < b) + [b]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = quad(f, lo, hi, epsabs=ABS_TOL, epsrel=REL_TOL, limit=200)
        total += val
    return sign * total


def _check_accel(params: TrainParams, *speeds: float) -> None:
    vs = params.v_sup
    for v in speeds:
        if v < 0:
            raise ValueError("speed must be non-negative")
        if v >= vs - VSUP_MARGIN:
            raise NearSingular(f"speed {v:.6f} within {VSUP_MARGIN} of V_sup={vs:.6f}")


# maximum acceleration: dt = dv/(H - r), dx = v dv/(H - r)
def accel_time(params: TrainParams, v_lo: float, v_hi: float) -> float:
    """Time to accelerate at full traction from ``v_lo`` to ``v_hi``.

    Signed: returns the negative integral if ``v_lo > v_hi``.
    """
    _check_accel(params, v_lo, v_hi)
    H, r = params.H, params.r
    return _integrate(lambda v: 1.0 / (H(v) - r(v)), v_lo, v_hi, (params.traction_break,))


def accel_dist(params: TrainParams, v_lo: float, v_hi: float) -> float:
    _check_accel(params, v_lo, v_hi)
    H, r = params.H, params.r
    return _integrate(lambda v: v / (H(v) - r(v)), v_lo, v_hi, (params.traction_break,))


def accel_work(params: TrainParams, v_lo: float, v_hi: float) -> float:
    """Tractive work per unit mass, the integral of H dx over the phase."""
    _check_accel(params, v_lo, v_hi)
    H, r = params.H, params.r
    return _integrate(lambda v: v * H(v) / (H(v) - r(v)), v_lo, v_hi, (params.traction_break,))


# coast: |dt| = dv/r, |dx| = v dv/r
def coast_time(params: TrainParams, v_hi: float, v_lo: float) -> float:
    """Time to coast down from ``v_hi`` to ``v_lo`` (signed if reversed)."""
    r = params.r
    return _integrate(lambda v: 1.0 / r(v), v_lo, v_hi)


def coast_dist(params: TrainParams, v_hi: float, v_lo: float) -> float:
    r = params.r
    return _integrate(lambda v: v / r(v), v_lo, v_hi)


# full brake to rest: |dt| = dv/(K + r), |dx| = v dv/(K + r)
def brake_time(params: TrainParams, v_hi: float) -> float:
    if v_hi < 0:
        raise ValueError("speed must be non-negative")
    K, r = params.K, params.r
    return _integrate(lambda v: 1.0 / (K(v) + r(v)), 0.0, v_hi, (params.brake_break,))


def brake_dist(params: TrainParams, v_hi: float) -> float:
    if v_hi < 0:
        raise ValueError("speed must be non-negative")
    K, r = params.K, params.r
    return _integrate(lambda v: v / (K(v) + r(v)), 0.0, v_hi, (params.brake_break,))


# integrand values, used for Leibniz-rule derivatives at moving limits
def accel_rate(params: TrainParams, v: float) -> float:
    """dt/dv under full traction."""
    return 1.0 / (params.H(v) - params.r(v))


def coast_rate(params: TrainParams, v: float) -> float:
    return 1.0 / params.r(v)


def brake_rate(params: TrainParams, v: float) -> float:
    return 1.0 / (params.K(v) + params.r(v))
