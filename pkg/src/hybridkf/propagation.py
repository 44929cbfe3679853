"""Time update between measurements.

The mean solves its moment ODE with the adaptive implicit integrator; the
covariance is stepped on the same mesh by the implicit mid-point rule

    P_{l+1} = M P_l M^T + tau K G Q G^T K^T,
    K = (I - tau/2 F_mid)^{-1},  M = K (I + tau/2 F_mid),

with F_mid evaluated at the integrator's middle stage value.  The covariance
step exists in dense form and in SVD factored form (one rectangular SVD per
step).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .belief import GaussianBelief, Representation
from .errors import FilterDivergence, SingularMidpointSystem, StepRejected
from .linalg import SpectralFactors, spectral_from_dense, svd_post_arrays
from .models import ContinuousDiscreteModel
from .nirk import AdaptiveMesh, IntegrationResult, integrate_interval


@dataclass(frozen=True)
class MidpointMatrices:
    k_half: np.ndarray
    m_half: np.ndarray


def midpoint_matrices(
    jac: Callable, t_mid: float, x_mid: np.ndarray, tau: float
) -> MidpointMatrices:
    """K and M of the mid-point rule, via one LU factorization."""
    f_mid = np.asarray(jac(t_mid, x_mid), dtype=float)
    n = f_mid.shape[0]
    half = (tau / 2.0) * f_mid
    lhs = np.eye(n) - half
    try:
        lu = lu_factor(lhs)
    except ValueError as exc:
        raise SingularMidpointSystem(str(exc)) from exc
    if np.any(np.abs(np.diag(lu[0])) < np.finfo(float).tiny):
        raise SingularMidpointSystem("I - (tau/2) F is singular")
    k_half = lu_solve(lu, np.eye(n))
    m_half = lu_solve(lu, np.eye(n) + half)
    if not (np.all(np.isfinite(k_half)) and np.all(np.isfinite(m_half))):
        raise SingularMidpointSystem("non-finite mid-point matrices")
    return MidpointMatrices(k_half=k_half, m_half=m_half)


def propagate_cov_dense(
    p_l: np.ndarray,
    mm: MidpointMatrices,
    g: np.ndarray,
    q: np.ndarray,
    tau: float,
) -> np.ndarray:
    kg = mm.k_half @ g
    p_next = mm.m_half @ p_l @ mm.m_half.T + tau * kg @ q @ kg.T
    p_next = 0.5 * (p_next + p_next.T)
    if not np.all(np.isfinite(p_next)):
        raise FilterDivergence("non-finite propagated covariance")
    return p_next


def propagate_cov_svd(
    factors_l: SpectralFactors,
    mm: MidpointMatrices,
    g: np.ndarray,
    q_factors: SpectralFactors,
    tau: float,
) -> SpectralFactors:
    """Factored mid-point step: SVD of [M S_P, sqrt(tau) K G S_Q]."""
    pre = np.hstack(
        [
            mm.m_half @ factors_l.square_root(),
            np.sqrt(tau) * mm.k_half @ g @ q_factors.square_root(),
        ]
    )
    w, s = svd_post_arrays(pre)
    return SpectralFactors(q_factor=w, d_sqrt=s)


def time_update(
    belief: GaussianBelief,
    model: ContinuousDiscreteModel,
    t_start: float,
    t_end: float,
    eps_g: float,
    representation: Representation,
    q_factors: SpectralFactors | None = None,
) -> tuple[GaussianBelief, AdaptiveMesh]:
    """Predict the belief across [t_start, t_end].

    The covariance is advanced inside the integrator's step callback so mean
    and covariance share one mesh; a singular mid-point system forces a step
    rejection (the step is retried halved).
    """
    if t_end == t_start:
        return belief, AdaptiveMesh(nodes=np.array([t_start]))

    spectral = representation is Representation.SPECTRAL
    if spectral and q_factors is None:
        q_factors = spectral_from_dense(model.process_cov)
    cov0 = belief.spectral() if spectral else belief.covariance()
    cov_state = [cov0]

    def on_restart() -> None:
        cov_state[0] = cov0

    def on_step(t_l, tau, _x_l, x_mid, _x_next) -> None:
        try:
            mm = midpoint_matrices(model.jacobian, t_l + tau / 2.0, x_mid, tau)
        except SingularMidpointSystem as exc:
            raise StepRejected(str(exc)) from exc
        if spectral:
            cov_state[0] = propagate_cov_svd(
                cov_state[0], mm, model.diffusion, q_factors, tau
            )
        else:
            cov_state[0] = propagate_cov_dense(
                cov_state[0], mm, model.diffusion, model.process_cov, tau
            )

    result: IntegrationResult = integrate_interval(
        model.drift,
        model.jacobian,
        t_start,
        t_end,
        belief.mean,
        eps_g,
        on_restart=on_restart,
        on_step=on_step,
    )
    if spectral:
        predicted = GaussianBelief.from_spectral(result.x_end, cov_state[0])
    else:
        predicted = GaussianBelief.from_dense(result.x_end, cov_state[0])
    return predicted, result.mesh
