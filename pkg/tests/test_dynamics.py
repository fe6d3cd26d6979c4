import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trainsep.dynamics import (
    ALTERNATIVE_TRAIN,
    REFERENCE_TRAIN,
    TrainParams,
    brake_bound,
    psi_dagger,
    resistance,
    traction_bound,
    u_b,
    u_s,
    u_s_dagger,
    v_sup,
    virtual_driving_speed,
)
from trainsep.errors import NoRoot, OutOfRange

P = REFERENCE_TRAIN
A = ALTERNATIVE_TRAIN
speeds = st.floats(min_value=1.0, max_value=44.0)


def test_traction_plateau_and_hyperbola():
    assert traction_bound(P, 5.0) == pytest.approx(0.84)
    assert traction_bound(P, 30.0) == pytest.approx(9.10 / 30.0)
    assert traction_bound(P, 9.10 / 0.84) == pytest.approx(0.84)
    assert brake_bound(P, 0.0) == pytest.approx(1.0)
    assert brake_bound(P, 20.0) == pytest.approx(10.83 / 20.0)


def test_resistance_values():
    assert resistance(P, 0.0) == pytest.approx(0.12)
    assert resistance(P, 30.0) == pytest.approx(0.12 + 0.003 + 0.036)
    assert resistance(A, 20.0) == pytest.approx(0.09)
    with pytest.raises(ValueError):
        resistance(P, -1.0)


def test_v_sup_reference():
    assert v_sup(P) == pytest.approx(44.6011, abs=1e-3)


@pytest.mark.parametrize("params", [P, A])
def test_v_sup_matches_cubic_root(params):
    # on the hyperbolic branch p1/v = r(v), i.e. r2 v^3 + r1 v^2 + r0 v - p1 = 0
    roots = np.roots([params.r2, params.r1, params.r0, -params.p1])
    real = [z.real for z in roots if abs(z.imag) < 1e-9 and z.real > params.p1 / params.p0]
    assert len(real) == 1
    assert v_sup(params) == pytest.approx(real[0], rel=1e-10)


def test_v_sup_no_root():
    weak = TrainParams(p0=0.1, p1=1.0, q0=1.0, q1=1.0, r0=0.2, r1=0.0, r2=1e-5)
    with pytest.raises(NoRoot):
        v_sup(weak)


def test_params_validation():
    with pytest.raises(ValueError):
        TrainParams(p0=0.0, p1=9.1, q0=1.0, q1=10.0, r0=0.1, r1=0.0, r2=1e-5)
    with pytest.raises(ValueError):
        TrainParams(p0=1.0, p1=9.1, q0=1.0, q1=10.0, r0=0.1, r1=-1e-4, r2=1e-5)


def test_u_b_values():
    assert u_b(P, 30.0) == pytest.approx(9.62, abs=0.01)
    assert u_b(P, 41.2507) == pytest.approx(17.4032, abs=1e-3)


@given(st.floats(min_value=0.5, max_value=60.0))
def test_u_b_closed_form_without_linear_term(v):
    # r1 = 0: psi = 2 r2 v^3, phi' = r0 + 3 r2 v^2
    expected = 2 * A.r2 * v**3 / (A.r0 + 3 * A.r2 * v**2)
    assert u_b(A, v) == pytest.approx(expected, rel=1e-12)


def test_u_s_values():
    assert u_s(P, 22.9024, 15.9710) == pytest.approx(19.6342, abs=1e-3)
    assert u_s(P, 15.9710, 34.5262) == pytest.approx(26.3486, abs=1e-3)


def test_u_s_dagger_values():
    assert u_s_dagger(P, 20.6766, 18.3070, 40.6212) == pytest.approx(33.5071, abs=1e-3)
    # printed as 35.2248; the solved segment it belongs to reproduces every
    # other printed number, and this value gives 35.2648
    assert u_s_dagger(P, 23.8935, 17.4819, 41.2937) == pytest.approx(35.2648, abs=1e-3)


@given(speeds, st.floats(min_value=10.0, max_value=44.0))
def test_u_s_dagger_reduces_to_u_s_at_brake_speed(v, w):
    if abs(v - w) < 1e-2:  # both quotients are 0/0 on the diagonal
        return
    assert u_s_dagger(P, u_b(P, w), v, w) == pytest.approx(u_s(P, v, w), rel=1e-9)


def test_u_s_dagger_continuous_at_boundary():
    v, w = 18.0, 40.0
    ub = u_b(P, w)
    assert abs(u_s_dagger(P, ub + 1e-9, v, w) - u_s(P, v, w)) < 1e-6
    with pytest.raises(OutOfRange):
        u_s_dagger(P, ub - 1.0, v, w)


@given(st.floats(min_value=0.1, max_value=44.6))
def test_u_b_below_speed(v):
    assert 0.0 < u_b(P, v) < v


@given(speeds, speeds)
def test_u_s_between(v, w):
    if abs(v - w) < 1e-3:
        return
    u = u_s(P, v, w)
    assert min(v, w) < u < max(v, w)


def test_u_s_degenerate_limit():
    v = 27.3
    assert u_s(P, v, v) == pytest.approx(v, rel=1e-12)
    assert u_s(P, v, v + 1e-4) == pytest.approx(v + 5e-5, abs=1e-6)


@pytest.mark.parametrize("params", [P, A])
def test_psi_increasing_phi_convex(params):
    v = np.linspace(0.01, params.v_sup, 2000)
    psi = np.array([params.psi(x) for x in v])
    phi = np.array([params.phi(x) for x in v])
    assert np.all(np.diff(psi) > 0)
    assert np.all(np.diff(phi, 2) >= -1e-12)


def test_virtual_speed_inverts_psi_dagger():
    vmax, u = 28.13, 21.29
    v = virtual_driving_speed(P, vmax, u)
    assert P.psi(v) == pytest.approx(psi_dagger(P, vmax, u), rel=1e-10)


def test_envelope_min_not_max():
    # the min-envelope gives a finite balancing speed; the max-envelope would never fall below p0
    assert math.isfinite(v_sup(P))
    assert P.H(100.0) == pytest.approx(0.091)
