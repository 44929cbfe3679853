"""Continuous-discrete state-space models and the three benchmark systems.

Each benchmark comes in a well-conditioned form and an ill-conditioned form
where two nearly identical linear measurement rows and a vanishing noise
level delta provoke roundoff-driven filter divergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInput

DEG = np.pi / 180.0


@dataclass(frozen=True)
class ContinuousDiscreteModel:
    """SDE dynamics dx = f(t,x) dt + G dbeta observed at discrete instants.

    The Brownian increment has covariance Q dt; measurements are
    z_k = h(k, x(t_k)) + v_k with v_k ~ N(0, R).  angle_mask flags measurement
    components whose innovations must be wrapped into (-pi, pi].
    """

    name: str
    state_dim: int
    noise_dim: int
    meas_dim: int
    drift: Callable[[float, np.ndarray], np.ndarray]
    jacobian: Callable[[float, np.ndarray], np.ndarray]
    diffusion: np.ndarray
    process_cov: np.ndarray
    measurement: Callable[[int, np.ndarray], np.ndarray]
    meas_cov: np.ndarray
    initial_mean: np.ndarray
    initial_cov: np.ndarray
    angle_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.angle_mask is None:
            object.__setattr__(
                self, "angle_mask", np.zeros(self.meas_dim, dtype=bool)
            )


def _check_delta(delta: float | None) -> None:
    if delta is not None and not (0.0 < delta <= 1.0):
        raise InvalidInput(f"ill-conditioning delta must be in (0, 1], got {delta}")


def _linear_measurement(h_mat: np.ndarray):
    def h(_k: int, x: np.ndarray) -> np.ndarray:
        return h_mat @ x

    return h


def make_coordinated_turn(
    ill_conditioned_delta: float | None = None,
) -> ContinuousDiscreteModel:
    """Aircraft coordinated turn in 3D with a nearly constant turn rate.

    State: [eps, eps_dot, eta, eta_dot, zeta, zeta_dot, omega].
    Original case: radar range/azimuth/elevation; ill-conditioned case: two
    almost identical linear rows with noise level delta.
    """
    _check_delta(ill_conditioned_delta)
    sigma1 = np.sqrt(0.2)
    sigma2 = 0.007
    g = np.diag([0.0, sigma1, 0.0, sigma1, 0.0, sigma1, sigma2])
    q = np.eye(7)

    def drift(_t: float, x: np.ndarray) -> np.ndarray:
        omega = x[6]
        return np.array(
            [x[1], -omega * x[3], x[3], omega * x[1], x[5], 0.0, 0.0]
        )

    def jacobian(_t: float, x: np.ndarray) -> np.ndarray:
        omega = x[6]
        jac = np.zeros((7, 7))
        jac[0, 1] = 1.0
        jac[1, 3] = -omega
        jac[1, 6] = -x[3]
        jac[2, 3] = 1.0
        jac[3, 1] = omega
        jac[3, 6] = x[1]
        jac[4, 5] = 1.0
        return jac

    x0 = np.array([1000.0, 0.0, 2650.0, 150.0, 200.0, 0.0, 3.0 * DEG])
    pi0 = 0.01 * np.eye(7)

    if ill_conditioned_delta is None:
        sig_r = 50.0
        sig_ang = 0.1 * DEG

        def measurement(_k: int, x: np.ndarray) -> np.ndarray:
            eps, eta, zeta = x[0], x[2], x[4]
            rho = np.hypot(eps, eta)
            return np.array(
                [
                    np.sqrt(eps**2 + eta**2 + zeta**2),
                    np.arctan2(eta, eps),
                    np.arctan2(zeta, rho),
                ]
            )

        return ContinuousDiscreteModel(
            name="coordinated_turn",
            state_dim=7,
            noise_dim=7,
            meas_dim=3,
            drift=drift,
            jacobian=jacobian,
            diffusion=g,
            process_cov=q,
            measurement=measurement,
            meas_cov=np.diag([sig_r**2, sig_ang**2, sig_ang**2]),
            initial_mean=x0,
            initial_cov=pi0,
            angle_mask=np.array([False, True, True]),
        )

    delta = ill_conditioned_delta
    h_mat = np.ones((2, 7))
    h_mat[1, 6] += delta
    return ContinuousDiscreteModel(
        name="coordinated_turn_ill",
        state_dim=7,
        noise_dim=7,
        meas_dim=2,
        drift=drift,
        jacobian=jacobian,
        diffusion=g,
        process_cov=q,
        measurement=_linear_measurement(h_mat),
        meas_cov=delta**2 * np.eye(2),
        initial_mean=x0,
        initial_cov=pi0,
    )


def make_cstr(
    ill_conditioned_delta: float | None = None,
    noise_scale: float = 1e-6,
) -> ContinuousDiscreteModel:
    """Isothermal CSTR with a gas-phase reversible three-species reaction.

    State: concentrations [c_A, c_B, c_C].  The continuous process noise
    covariance is noise_scale * I_3; the feed concentration is frozen at the
    deterministic initial mean.
    """
    _check_delta(ill_conditioned_delta)
    k1, k2, k3, k4 = 0.5, 0.05, 0.2, 0.01
    q_f = q_0 = 1.0
    v_r = 100.0
    nu = np.array([[-1.0, 1.0, 1.0], [0.0, -2.0, 1.0]])
    x0 = np.array([0.5, 0.05, 0.0])
    c_f = x0.copy()
    rt = 32.84

    def drift(_t: float, x: np.ndarray) -> np.ndarray:
        r = np.array(
            [k1 * x[0] - k2 * x[1] * x[2], k3 * x[1] ** 2 - k4 * x[2]]
        )
        return (q_f / v_r) * c_f - (q_0 / v_r) * x + nu.T @ r

    def jacobian(_t: float, x: np.ndarray) -> np.ndarray:
        dr = np.array(
            [
                [k1, -k2 * x[2], -k2 * x[1]],
                [0.0, 2.0 * k3 * x[1], -k4],
            ]
        )
        return -(q_0 / v_r) * np.eye(3) + nu.T @ dr

    if ill_conditioned_delta is None:
        h_mat = rt * np.ones((1, 3))
        meas_cov = np.array([[0.25**2]])
        name = "cstr"
    else:
        delta = ill_conditioned_delta
        h_mat = rt * np.ones((2, 3))
        h_mat[1, 2] = rt * (1.0 + delta)
        meas_cov = delta**2 * np.eye(2)
        name = "cstr_ill"

    return ContinuousDiscreteModel(
        name=name,
        state_dim=3,
        noise_dim=3,
        meas_dim=h_mat.shape[0],
        drift=drift,
        jacobian=jacobian,
        diffusion=np.eye(3),
        process_cov=noise_scale * np.eye(3),
        measurement=_linear_measurement(h_mat),
        meas_cov=meas_cov,
        initial_mean=x0,
        initial_cov=np.eye(3),
    )


def make_van_der_pol(lam: float) -> ContinuousDiscreteModel:
    """Stochastic Van der Pol oscillator; lam scales the nonlinear damping."""
    if lam <= 0:
        raise InvalidInput(f"stiffness parameter must be positive, got {lam}")

    def drift(_t: float, x: np.ndarray) -> np.ndarray:
        return np.array([x[1], lam * ((1.0 - x[0] ** 2) * x[1] - x[0])])

    def jacobian(_t: float, x: np.ndarray) -> np.ndarray:
        return np.array(
            [
                [0.0, 1.0],
                [lam * (-2.0 * x[0] * x[1] - 1.0), lam * (1.0 - x[0] ** 2)],
            ]
        )

    return ContinuousDiscreteModel(
        name=f"van_der_pol_{lam:g}",
        state_dim=2,
        noise_dim=2,
        meas_dim=1,
        drift=drift,
        jacobian=jacobian,
        diffusion=np.array([[0.0, 0.0], [0.0, 1.0]]),
        process_cov=np.eye(2),
        measurement=_linear_measurement(np.array([[1.0, 1.0]])),
        meas_cov=np.array([[0.04]]),
        initial_mean=np.array([2.0, 0.0]),
        initial_cov=np.diag([0.1, 0.1]),
    )
