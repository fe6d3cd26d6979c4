"""Constant-speed scheduling: printed optima, derivative checks and convexity."""

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from trainsep import scenarios as sc
from trainsep.constant_speed import (
    CsProblem,
    cs_cost,
    cs_gradient,
    cs_hessian,
    cs_objective,
    cs_solve,
    delay_to_separate,
    section_speeds,
    uniform_start,
)
from trainsep.constraints import build_custom_table, build_full_table
from trainsep.dynamics import REFERENCE_TRAIN
from trainsep.errors import NonpositiveSectionTime

P = REFERENCE_TRAIN

W_UNWEIGHTED = np.array([
    [21.27, 21.27, 31.68, 29.97, 19.53, 18.28, 28.99, 28.99, 16.75],
    [19.84, 19.84, 30.11, 30.60, 20.07, 20.98, 30.71, 30.71, 11.55],
    [20.83, 20.83, 30.94, 30.53, 19.76, 17.34, 31.99, 31.99, 27.35],
    [19.61, 19.61, 30.46, 31.35, 20.55, 23.81, 29.53, 29.53, 19.56],
])
W_WEIGHTED = np.array([
    [19.21, 19.21, 33.43, 31.74, 21.09, 16.58, 31.68, 31.68, 12.89],
    [17.55, 17.55, 32.51, 33.99, 21.43, 18.96, 33.20, 33.20, 9.51],
    [18.80, 18.80, 33.03, 32.94, 21.22, 16.06, 34.20, 34.20, 19.26],
    [17.69, 17.69, 32.71, 34.35, 21.69, 20.94, 31.44, 31.44, 15.72],
])
TIMED_MINIMAL = {  # (train, signal) -> printed time for timed cells of the minimal schedule
    (0, 2): 469, (0, 3): 793, (0, 4): 1403, (0, 5): 1681, (0, 6): 2083, (0, 8): 3019,
    (1, 4): 2279, (1, 5): 2610, (1, 8): 3907, (2, 4): 3209, (2, 5): 3484, (2, 8): 4762,
    (3, 6): 4762, (1, 2): 1403, (3, 8): 5683, (3, 4): 4069,
}
TIMED_WEIGHTED = {
    (0, 2): 519, (0, 3): 830, (0, 4): 1409, (0, 5): 1666, (0, 6): 2109, (0, 8): 2971,
    (1, 2): 1469, (1, 3): 1726, (1, 4): 2271, (1, 5): 2584, (1, 6): 3031, (1, 8): 3857,
    (2, 2): 2331, (2, 3): 2644, (2, 4): 3204, (2, 5): 3460, (2, 6): 3917, (2, 8): 4720,
    (3, 2): 3264, (3, 3): 3520, (3, 4): 4059, (3, 5): 4370, (3, 6): 4780, (3, 8): 5649,
}


def minimal_problem():
    return CsProblem(sc.POSITIONS, sc.minimal_separation_table(), sc.reference_trains())


def weighted_problem(form="rate"):
    return CsProblem(sc.POSITIONS, sc.buffered_table(), sc.reference_trains(), sc.penalty_grid(), form)


def psi_prime(v):
    return 2 * P.r1 * v + 6 * P.r2 * v**2


def central_gradient(f, h, step=1e-3):
    g = np.zeros(len(h))
    for k in range(len(h)):
        e = np.zeros(len(h))
        e[k] = step
        g[k] = (f(h + e) - f(h - e)) / (2 * step)
    return g


# --- uniform speeds ---------------------------------------------------------------


def test_uniform_speeds_and_cost():
    sol = cs_solve(CsProblem(sc.POSITIONS, sc.uniform_table(), P))
    assert sol.W[:, 0] == pytest.approx([25.23, 25.23, 26.28, 26.28], abs=0.01)
    assert np.all(sol.W == sol.W[:, :1])
    assert sol.cost == pytest.approx(45156, abs=1)


def test_uniform_pass_through_times():
    sol = cs_solve(CsProblem(sc.POSITIONS, sc.uniform_table(), P))
    assert sol.times[0, 4] == pytest.approx(1500, abs=1)
    assert sol.times[3, 7] == pytest.approx(4996, abs=1)
    assert sol.times[2, 3] == pytest.approx(2558, abs=1)


def test_delayed_departures_separate_the_fleet():
    sol = cs_solve(CsProblem(sc.POSITIONS, sc.uniform_table(), P))
    grid, delays = delay_to_separate(sol.times, cycle=3600.0)
    assert grid[1:, 0] == pytest.approx([1104, 2307, 3372, 4384], abs=1)
    assert grid[2:, -1] == pytest.approx([5367, 6492, 7564], abs=1)
    # a rigid delay keeps every journey time
    np.testing.assert_allclose(grid[:, -1] - grid[:, 0], [3180, 3240, 3060, 3120, 3180])
    assert delays[0] == 0 and np.all(np.diff(grid[:, 0]) > 0)


def test_single_section_cost():
    table = build_custom_table({"A": ["fixed:0", "fixed:100"]}, ["a", "b"])
    prob = CsProblem(np.array([0.0, 1000.0]), table, P)
    assert cs_cost(prob, []) == pytest.approx(P.r(10.0) * 1000.0, rel=1e-14)


def test_two_equal_sections_meet_in_the_middle():
    prob = CsProblem(np.array([0.0, 1000.0, 2000.0]), build_full_table(1, 2, 200.0), P)
    sol = cs_solve(prob, h0=[37.0])
    assert sol.h == pytest.approx([100.0], abs=1e-8)
    assert sol.W[0] == pytest.approx([10.0, 10.0])


# --- Glasgow-Edinburgh optima ----------------------------------------------------------


def test_unweighted_optimum():
    prob = minimal_problem()
    sol = cs_solve(prob)
    assert sol.iterations <= 15
    assert sol.grad_norm < 1e-8
    np.testing.assert_allclose(sol.W, W_UNWEIGHTED, atol=0.01)
    assert sol.cost == pytest.approx(46295, abs=2)
    for (i, j), t in TIMED_MINIMAL.items():
        assert sol.times[i, j] == pytest.approx(t, abs=1), (i, j)


def test_weighted_optimum():
    prob = weighted_problem()
    sol = cs_solve(prob)
    assert sol.iterations <= 15
    np.testing.assert_allclose(sol.W[:, :8], W_WEIGHTED[:, :8], atol=0.01)
    # the short last section turns 0.01 m/s into ~0.1 s, so compare the implied
    # HYM departure instead of the two-decimal speed
    implied = sc.ARRIVALS - 2690.0 / W_WEIGHTED[:, 8]
    np.testing.assert_allclose(sol.times[:, 8], implied, atol=0.5)
    assert sol.cost == pytest.approx(47307, abs=2)
    assert sol.objective > sol.cost
    for (i, j), t in TIMED_WEIGHTED.items():
        assert sol.times[i, j] == pytest.approx(t, abs=1), (i, j)


def test_gradient_layout():
    prob = minimal_problem()
    h = uniform_start(prob) + np.linspace(-20, 20, 12)
    W = section_speeds(prob, h)

    def s(i, j):  # 1-based train and section
        return P.psi(W[i - 1, j - 1])

    expected = [
        s(1, 3) - s(1, 1) + s(4, 5) - s(4, 4),
        s(1, 4) - s(1, 3) + s(4, 6) - s(4, 5),
        s(1, 5) - s(1, 4) + s(2, 3) - s(2, 1),
        s(1, 6) - s(1, 5) + s(2, 4) - s(2, 3),
        s(1, 7) - s(1, 6) + s(4, 9) - s(4, 7),
        s(1, 9) - s(1, 7) + s(2, 7) - s(2, 6),
        s(2, 5) - s(2, 4) + s(3, 3) - s(3, 1),
        s(2, 6) - s(2, 5) + s(3, 4) - s(3, 3),
        s(2, 9) - s(2, 7) + s(3, 7) - s(3, 6),
        s(3, 5) - s(3, 4) + s(4, 3) - s(4, 1),
        s(3, 6) - s(3, 5) + s(4, 4) - s(4, 3),
        s(3, 9) - s(3, 7) + s(4, 7) - s(4, 6),
    ]
    np.testing.assert_allclose(cs_gradient(prob, h), expected, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("make", [minimal_problem, weighted_problem, lambda: weighted_problem("resistance")])
def test_gradient_matches_finite_differences(make):
    prob = make()
    h = uniform_start(prob) + np.linspace(15, -15, 12)
    fd = central_gradient(lambda x: cs_objective(prob, x), h)
    np.testing.assert_allclose(cs_gradient(prob, h), fd, rtol=1e-5, atol=1e-6)


@pytest.mark.parametrize("make", [minimal_problem, weighted_problem, lambda: weighted_problem("resistance")])
def test_hessian_matches_finite_differences(make):
    prob = make()
    h = uniform_start(prob) + np.linspace(-10, 10, 12)
    H = cs_hessian(prob, h)
    fd = np.column_stack([
        central_gradient(lambda x, k=k: cs_gradient(prob, x)[k], h) for k in range(12)
    ]).T
    np.testing.assert_allclose(H, H.T, rtol=1e-12)
    np.testing.assert_allclose(H, fd, rtol=1e-4, atol=1e-7)


@pytest.mark.parametrize("make", [minimal_problem, weighted_problem])
def test_hessian_positive_definite_at_optimum(make):
    prob = make()
    sol = cs_solve(prob)
    np.linalg.cholesky(cs_hessian(prob, sol.h))


def test_single_train_chain_hessian():
    x = np.array([0.0, 3000.0, 7000.0, 9000.0, 14000.0])
    prob = CsProblem(x, build_full_table(1, 4, 700.0), P)
    h = np.array([150.0, 330.0, 430.0])
    t = np.concatenate([[0.0], h, [700.0]])
    W = np.diff(x) / np.diff(t)
    beta = W * psi_prime(W) / np.diff(t)
    expected = np.diag(beta[:-1] + beta[1:]) - np.diag(beta[1:-1], 1) - np.diag(beta[1:-1], -1)
    np.testing.assert_allclose(cs_hessian(prob, h), expected, rtol=1e-10)


def test_resistance_form():
    rate, res = weighted_problem("rate"), weighted_problem("resistance")
    h = sc.WEIGHTED_OPTIMUM_H
    W = section_speeds(res, h)
    dx = np.diff(sc.POSITIONS)
    direct = sum(P.r(W[i, j] + res.penalties[i, j]) * dx[j] for i in range(4) for j in range(9))
    assert cs_objective(res, h) == pytest.approx(direct, rel=1e-12)
    assert cs_cost(res, h) == cs_cost(rate, h)
    sol = cs_solve(res)
    assert sol.grad_norm < 1e-8


def test_penalty_forms_agree_without_penalties():
    a = CsProblem(sc.POSITIONS, sc.buffered_table(), P, None, "rate")
    b = CsProblem(sc.POSITIONS, sc.buffered_table(), P, None, "resistance")
    h = sc.WEIGHTED_OPTIMUM_H
    assert cs_objective(a, h) == pytest.approx(cs_objective(b, h), rel=1e-12)
    np.testing.assert_allclose(cs_gradient(a, h), cs_gradient(b, h), rtol=1e-12)


def test_nonpositive_section_time():
    prob = minimal_problem()
    h = uniform_start(prob)
    h[1] = h[0] - 1.0
    with pytest.raises(NonpositiveSectionTime):
        cs_cost(prob, h)


def test_problem_validation():
    with pytest.raises(ValueError):
        CsProblem(sc.POSITIONS[:-1], sc.buffered_table(), P)
    with pytest.raises(ValueError):
        CsProblem(sc.POSITIONS, sc.buffered_table(), P, -sc.penalty_grid())
    with pytest.raises(ValueError):
        CsProblem(sc.POSITIONS, sc.buffered_table(), P, None, "quadratic")


# --- properties -------------------------------------------------------------------------

offsets = st.lists(st.floats(min_value=-60.0, max_value=60.0), min_size=12, max_size=12)


@given(offsets, offsets)
def test_cost_convex_along_segments(da, db):
    prob = minimal_problem()
    base = uniform_start(prob)
    ha, hb = base + np.array(da), base + np.array(db)
    try:
        fa, fb, fm = (cs_cost(prob, h) for h in (ha, hb, 0.5 * (ha + hb)))
    except NonpositiveSectionTime:
        assume(False)
    assert fm <= 0.5 * (fa + fb) + 1e-9


@given(offsets)
def test_solution_unique(d):
    prob = weighted_problem()
    ref = cs_solve(prob)
    start = uniform_start(prob) + np.array(d)
    try:
        cs_cost(prob, start)
    except NonpositiveSectionTime:
        assume(False)
    np.testing.assert_allclose(cs_solve(prob, h0=start).h, ref.h, atol=1e-6)
