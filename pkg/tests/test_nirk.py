"""Nested implicit Runge-Kutta pair: oracles, order, and error control."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from hybridkf.errors import (
    AccuracyNotAttainable,
    InvalidInput,
    StepBudgetExceeded,
    StepRejected,
)
from hybridkf.nirk import gauss_nirk_pair, integrate_interval, nirk_step


def _exp_problem(rate=-1.0):
    f = lambda t, x: rate * x
    jac = lambda t, x: rate * np.eye(x.size)
    return f, jac


def test_tableau_quadrature_weights():
    cf = gauss_nirk_pair()
    assert np.allclose(cf.b, [5 / 18, 4 / 9, 5 / 18])
    assert cf.c3[1] == 0.5
    assert np.allclose(cf.c3[0] + cf.c3[2], 1.0)
    assert np.allclose(cf.c2[0] + cf.c2[1], 1.0)
    # interpolation weights reproduce constants exactly
    assert np.allclose(cf.a2.sum(axis=1), 1.0)
    assert np.allclose(cf.a3.sum(axis=1), 1.0)


def test_tableau_integrates_quintics_exactly():
    # Gauss-3 quadrature is exact through degree five
    cf = gauss_nirk_pair()
    for p in range(6):
        exact = 1.0 / (p + 1)
        assert cf.b @ cf.c3**p == pytest.approx(exact, abs=1e-14)


def test_single_step_matches_exponential():
    # oracle: x' = -x, x(0) = 1 -> exp(-tau); order-4 step at tau = 0.1
    f, jac = _exp_problem()
    out = nirk_step(f, jac, 0.0, np.array([1.0]), 0.1, tol_newton=1e-14)
    assert out.x_next[0] == pytest.approx(np.exp(-0.1), abs=1e-9)
    assert out.x_mid[0] == pytest.approx(np.exp(-0.05), abs=1e-7)


def test_step_order_four():
    # scaled error under halving should shrink by ~2^5 (local order 5)
    f, jac = _exp_problem(rate=-2.0)
    errs = []
    for tau in (0.2, 0.1, 0.05, 0.025):
        out = nirk_step(f, jac, 0.0, np.array([1.0]), tau, tol_newton=1e-15)
        errs.append(abs(out.x_next[0] - np.exp(-2.0 * tau)))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(slopes > 4.5)


def test_local_error_estimate_shrinks_at_order_five():
    # the estimate targets the order-4 companion, so it scales like tau^5
    f, jac = _exp_problem(rate=-2.0)
    ests = []
    for tau in (0.2, 0.1, 0.05):
        out = nirk_step(f, jac, 0.0, np.array([1.0]), tau, tol_newton=1e-15)
        ests.append(abs(out.le[0]))
    slopes = np.log2(np.array(ests[:-1]) / np.array(ests[1:]))
    assert np.all(slopes > 4.5)
    # and it safely bounds the true error of the advancing solution
    out = nirk_step(f, jac, 0.0, np.array([1.0]), 0.1, tol_newton=1e-15)
    assert abs(out.le[0]) >= abs(out.x_next[0] - np.exp(-0.2))


def test_invalid_step_size():
    f, jac = _exp_problem()
    with pytest.raises(InvalidInput):
        nirk_step(f, jac, 0.0, np.array([1.0]), 0.0, tol_newton=1e-10)


def test_newton_failure_raises_step_rejected():
    # drift that returns NaN forces a non-finite residual
    f = lambda t, x: np.full_like(x, np.nan)
    jac = lambda t, x: np.eye(1)
    with pytest.raises(StepRejected):
        nirk_step(f, jac, 0.0, np.array([1.0]), 0.1, tol_newton=1e-10)


def test_interval_exponential_oracle():
    f, jac = _exp_problem()
    res = integrate_interval(f, jac, 0.0, 2.0, np.array([3.0]), eps_g=1e-8)
    assert res.x_end[0] == pytest.approx(3.0 * np.exp(-2.0), rel=1e-7)
    assert res.mesh.nodes[0] == 0.0
    assert res.mesh.nodes[-1] == 2.0  # exact hit, no overshoot
    assert np.all(res.mesh.steps > 0)
    assert len(res.mid_states) == res.mesh.num_steps


def test_interval_error_scales_with_tolerance():
    f, jac = _exp_problem(rate=1.0)
    errors = {}
    for eps in (1e-4, 1e-6, 1e-8):
        res = integrate_interval(f, jac, 0.0, 1.0, np.array([1.0]), eps_g=eps)
        errors[eps] = abs(res.x_end[0] - np.e)
        assert errors[eps] <= 10.0 * eps
    assert errors[1e-8] < errors[1e-4]


def test_interval_stiff_decay():
    # lambda = -1e5 over [0, 1]: solution is ~0; explicit methods blow up
    f, jac = _exp_problem(rate=-1e5)
    res = integrate_interval(f, jac, 0.0, 1.0, np.array([1.0]), eps_g=1e-6)
    assert abs(res.x_end[0]) <= 1e-6
    assert res.mesh.num_steps < 2000


def test_step_budget_enforced():
    f, jac = _exp_problem()
    with pytest.raises(StepBudgetExceeded):
        integrate_interval(f, jac, 0.0, 1.0, np.array([1.0]), eps_g=1e-10, max_steps=2)


def test_interval_validation():
    f, jac = _exp_problem()
    with pytest.raises(InvalidInput):
        integrate_interval(f, jac, 1.0, 1.0, np.array([1.0]), eps_g=1e-6)
    with pytest.raises(InvalidInput):
        integrate_interval(f, jac, 0.0, 1.0, np.array([1.0]), eps_g=0.0)


def test_restart_tightens_local_tolerance():
    # count restarts on a problem whose global error exceeds the local target
    restarts = []
    f = lambda t, x: np.array([np.sin(40.0 * t) * x[0]])
    jac = lambda t, x: np.array([[np.sin(40.0 * t)]])
    res = integrate_interval(
        f,
        jac,
        0.0,
        3.0,
        np.array([1.0]),
        eps_g=1e-10,
        on_restart=lambda: restarts.append(1),
    )
    assert len(restarts) >= 1
    assert res.eps_loc <= 1e-10
    exact = np.exp((1.0 - np.cos(120.0)) / 40.0)
    assert res.x_end[0] == pytest.approx(exact, rel=1e-8)


def test_on_step_veto_halves_step():
    f, jac = _exp_problem()
    sizes = []

    def veto(t, tau, x_l, x_mid, x_next):
        sizes.append(tau)
        if len(sizes) == 1:
            raise StepRejected("veto")

    res = integrate_interval(
        f, jac, 0.0, 1.0, np.array([1.0]), eps_g=1e-6, on_step=veto
    )
    assert sizes[1] <= sizes[0] / 2.0 + 1e-15
    assert res.x_end[0] == pytest.approx(np.exp(-1.0), rel=1e-5)


def test_accuracy_floor_raises():
    # a noisy right-hand side can never meet an extreme tolerance
    rng = np.random.default_rng(0)
    f = lambda t, x: -x * (1.0 + 1e-4 * np.sin(1e6 * t))
    jac = lambda t, x: -np.eye(1)
    with pytest.raises((AccuracyNotAttainable, StepBudgetExceeded)):
        integrate_interval(
            f, jac, 0.0, 1.0, np.array([1.0]), eps_g=1e-15, max_steps=10**5
        )


mat3 = arrays(
    float, (3, 3), elements=st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
)
vec3 = arrays(
    float, 3, elements=st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False)
)


@given(mat3, vec3)
@settings(max_examples=30, deadline=None)
def test_linear_ode_matches_matrix_exponential(a, x0):
    # oracle: x' = A x has solution expm(A t) x0 (scipy)
    f = lambda t, x: a @ x
    jac = lambda t, x: a
    res = integrate_interval(f, jac, 0.0, 0.7, x0, eps_g=1e-9)
    exact = expm(0.7 * a) @ x0
    assert np.max(np.abs(res.x_end - exact)) <= 1e-6 * (1.0 + np.max(np.abs(exact)))
