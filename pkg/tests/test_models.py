"""Benchmark model definitions: drifts, Jacobians, measurement maps."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hybridkf.errors import InvalidInput
from hybridkf.models import (
    DEG,
    make_coordinated_turn,
    make_cstr,
    make_van_der_pol,
)


def numeric_jacobian(f, t, x, h=1e-6):
    n = x.size
    out = np.zeros((n, n))
    for i in range(n):
        step = h * (1.0 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        out[:, i] = (f(t, xp) - f(t, xm)) / (2.0 * step)
    return out


state7 = arrays(
    float, 7, elements=st.floats(-5e3, 5e3, allow_nan=False, allow_infinity=False)
)
state3 = arrays(
    float, 3, elements=st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
)
state2 = arrays(
    float, 2, elements=st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
)


@given(state7)
@settings(max_examples=50, deadline=None)
def test_tracking_jacobian_matches_finite_differences(x):
    m = make_coordinated_turn()
    x = x.copy()
    x[6] = x[6] / 5e3 * 0.3  # keep the turn rate physical
    fd = numeric_jacobian(m.drift, 0.0, x)
    assert np.max(np.abs(fd - m.jacobian(0.0, x))) <= 1e-4 * (1 + np.max(np.abs(fd)))


@given(state3)
@settings(max_examples=50, deadline=None)
def test_cstr_jacobian_matches_finite_differences(x):
    m = make_cstr()
    fd = numeric_jacobian(m.drift, 0.0, x)
    assert np.max(np.abs(fd - m.jacobian(0.0, x))) <= 1e-6 * (1 + np.max(np.abs(fd)))


@given(state2, st.floats(0.5, 1e4))
@settings(max_examples=50, deadline=None)
def test_vdp_jacobian_matches_finite_differences(x, lam):
    m = make_van_der_pol(lam)
    fd = numeric_jacobian(m.drift, 0.0, x)
    assert np.max(np.abs(fd - m.jacobian(0.0, x))) <= 1e-4 * (1 + np.max(np.abs(fd)))


def test_tracking_drift_hand_value():
    # hand-evaluated: [x1, -w*x3, x3, w*x1, x5, 0, 0]
    m = make_coordinated_turn()
    x = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.5])
    assert np.allclose(m.drift(0.0, x), [2.0, -2.0, 4.0, 1.0, 6.0, 0.0, 0.0])


def test_tracking_dimensions_and_noise():
    m = make_coordinated_turn()
    assert (m.state_dim, m.noise_dim, m.meas_dim) == (7, 7, 3)
    assert np.allclose(np.diag(m.diffusion), [0, np.sqrt(0.2), 0, np.sqrt(0.2), 0, np.sqrt(0.2), 0.007])
    assert np.allclose(m.process_cov, np.eye(7))
    assert np.allclose(m.meas_cov, np.diag([2500.0, (0.1 * DEG) ** 2, (0.1 * DEG) ** 2]))
    assert m.angle_mask.tolist() == [False, True, True]
    assert m.initial_mean[6] == pytest.approx(3.0 * DEG)
    assert np.allclose(m.initial_cov, 0.01 * np.eye(7))


def test_tracking_radar_map_hand_value():
    m = make_coordinated_turn()
    x = np.zeros(7)
    x[0], x[2], x[4] = 3.0, 4.0, 12.0  # range 13, azimuth atan2(4,3)
    z = m.measurement(1, x)
    assert z[0] == pytest.approx(13.0)
    assert z[1] == pytest.approx(np.arctan2(4.0, 3.0))
    assert z[2] == pytest.approx(np.arctan2(12.0, 5.0))


def test_tracking_ill_conditioned_rows():
    m = make_coordinated_turn(ill_conditioned_delta=1e-3)
    x = np.arange(1.0, 8.0)
    z = m.measurement(1, x)
    assert z[0] == pytest.approx(x.sum())
    assert z[1] == pytest.approx(x.sum() + 1e-3 * x[6])
    assert np.allclose(m.meas_cov, 1e-6 * np.eye(2))
    assert not m.angle_mask.any()


def test_cstr_drift_hand_value():
    # independently computed: r = (k1 cA - k2 cB cC, k3 cB^2 - k4 cC)
    m = make_cstr()
    x = np.array([1.0, 2.0, 3.0])
    r1 = 0.5 * 1.0 - 0.05 * 2.0 * 3.0
    r2 = 0.2 * 4.0 - 0.01 * 3.0
    expected = (
        np.array([0.5, 0.05, 0.0]) / 100.0
        - x / 100.0
        + np.array([-r1, r1 - 2 * r2, r1 + r2])
    )
    assert np.allclose(m.drift(0.0, x), expected)


def test_cstr_measurement_scaled_sum():
    m = make_cstr()
    assert m.measurement(1, np.array([1.0, 2.0, 3.0]))[0] == pytest.approx(32.84 * 6.0)
    assert m.meas_cov[0, 0] == pytest.approx(0.0625)


def test_cstr_noise_scale_parameter():
    m = make_cstr(noise_scale=1e-6 / 1e-3)
    assert np.allclose(m.process_cov, 1e-3 * np.eye(3))


def test_vdp_drift_hand_value():
    m = make_van_der_pol(10.0)
    x = np.array([2.0, 1.0])
    assert np.allclose(m.drift(0.0, x), [1.0, 10.0 * ((1 - 4.0) * 1.0 - 2.0)])
    assert m.measurement(3, x)[0] == pytest.approx(3.0)


def test_delta_validation():
    for bad in (0.0, -1e-3, 1.5):
        with pytest.raises(InvalidInput):
            make_coordinated_turn(ill_conditioned_delta=bad)
        with pytest.raises(InvalidInput):
            make_cstr(ill_conditioned_delta=bad)
    with pytest.raises(InvalidInput):
        make_van_der_pol(0.0)


def test_default_angle_mask_is_all_false():
    assert not make_cstr().angle_mask.any()
    assert not make_van_der_pol(1.0).angle_mask.any()
