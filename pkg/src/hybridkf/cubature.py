"""Measurement update via the third-degree spherical-radial cubature rule.

2n symmetric nodes are pushed through the measurement map; the centered node
matrices give the residual and cross covariances.  The conventional update
inverts the residual covariance directly; the square-root update carries SVD
factors through two rectangular pre-array decompositions and inverts only the
(thresholded) diagonal factor, which is what keeps it alive under severe
ill-conditioning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import GaussianBelief, Representation
from .errors import FilterDivergence
from .linalg import SpectralFactors, thresholded_reciprocal, svd_post_arrays
from .models import ContinuousDiscreteModel


@dataclass(frozen=True)
class CubatureWorkspace:
    nodes: np.ndarray          # (n, 2n)
    propagated: np.ndarray     # (m, 2n)
    predicted_meas: np.ndarray  # (m,)
    centered_x: np.ndarray     # (n, 2n), scaled by 1/sqrt(2n)
    centered_z: np.ndarray     # (m, 2n), scaled by 1/sqrt(2n)


def wrap_angles(residual: np.ndarray, angle_mask: np.ndarray) -> np.ndarray:
    """Wrap flagged components into (-pi, pi]."""
    out = residual.copy()
    a = out[angle_mask]
    out[angle_mask] = -(np.mod(-a + np.pi, 2.0 * np.pi) - np.pi)
    return out


def build_cubature(
    belief_pred: GaussianBelief, model: ContinuousDiscreteModel, k: int
) -> CubatureWorkspace:
    n = model.state_dim
    x_hat = belief_pred.mean
    s_p = belief_pred.spectral().square_root()
    offsets = np.sqrt(n) * np.hstack([s_p, -s_p])  # (n, 2n)
    nodes = x_hat[:, None] + offsets
    propagated = np.empty((model.meas_dim, 2 * n))
    for i in range(2 * n):
        propagated[:, i] = model.measurement(k, nodes[:, i])
    if not np.all(np.isfinite(propagated)):
        raise FilterDivergence("measurement map produced non-finite values")
    if np.any(model.angle_mask):
        # Angle components live on a circle: pull every node's angle onto the
        # branch nearest the center prediction, otherwise nodes straddling the
        # cut average to garbage and the update destroys the estimate.
        ref = model.measurement(k, x_hat)
        rows = np.flatnonzero(model.angle_mask)
        diff = propagated[rows] - ref[rows, None]
        propagated[rows] = ref[rows, None] - (
            np.mod(-diff + np.pi, 2.0 * np.pi) - np.pi
        )
    z_hat = propagated.mean(axis=1)
    scale = 1.0 / np.sqrt(2 * n)
    centered_x = scale * (nodes - x_hat[:, None])
    centered_z = scale * (propagated - z_hat[:, None])
    return CubatureWorkspace(
        nodes=nodes,
        propagated=propagated,
        predicted_meas=z_hat,
        centered_x=centered_x,
        centered_z=centered_z,
    )


def residual_factors_svd(
    ws: CubatureWorkspace, r_factors: SpectralFactors
) -> SpectralFactors:
    """SVD factors of Z Z^T + R from the pre-array [Z, Q_R D_R^{1/2}]."""
    pre = np.hstack([ws.centered_z, r_factors.square_root()])
    w, s = svd_post_arrays(pre)
    return SpectralFactors(q_factor=w, d_sqrt=s)


def gain_svd(ws: CubatureWorkspace, re_factors: SpectralFactors) -> np.ndarray:
    """Gain P_xz Q diag(1/s^2) Q^T; near-zero singular values are zeroed."""
    p_xz = ws.centered_x @ ws.centered_z.T
    m = re_factors.dim
    recip = thresholded_reciprocal(re_factors.d_sqrt**2, rows=m)
    return p_xz @ (re_factors.q_factor * recip) @ re_factors.q_factor.T


def measurement_update(
    belief_pred: GaussianBelief,
    z_k: np.ndarray,
    model: ContinuousDiscreteModel,
    k: int,
    representation: Representation,
    r_factors: SpectralFactors | None = None,
) -> GaussianBelief:
    """Assimilate one measurement; the covariance form follows representation.

    DENSE uses the conventional downdate P - K Re K^T (deliberately fragile
    under roundoff), SYMMETRIC the Joseph-like dense form, SPECTRAL the
    factored pre-array update.
    """
    z_k = np.asarray(z_k, dtype=float)
    if not np.all(np.isfinite(z_k)):
        raise FilterDivergence("non-finite measurement")
    ws = build_cubature(belief_pred, model, k)
    innovation = wrap_angles(z_k - ws.predicted_meas, model.angle_mask)

    if representation is Representation.SPECTRAL:
        if r_factors is None:
            from .linalg import spectral_from_dense

            r_factors = spectral_from_dense(model.meas_cov)
        re_factors = residual_factors_svd(ws, r_factors)
        gain = gain_svd(ws, re_factors)
        x_filt = belief_pred.mean + gain @ innovation
        pre = np.hstack(
            [ws.centered_x - gain @ ws.centered_z, gain @ r_factors.square_root()]
        )
        w, s = svd_post_arrays(pre)
        if not np.all(np.isfinite(x_filt)):
            raise FilterDivergence("non-finite filtered state")
        return GaussianBelief.from_spectral(
            x_filt, SpectralFactors(q_factor=w, d_sqrt=s)
        )

    # dense paths
    r_e = ws.centered_z @ ws.centered_z.T + model.meas_cov
    p_xz = ws.centered_x @ ws.centered_z.T
    try:
        gain = np.linalg.solve(r_e.T, p_xz.T).T
    except np.linalg.LinAlgError as exc:
        raise FilterDivergence(f"residual covariance not invertible: {exc}") from exc
    x_filt = belief_pred.mean + gain @ innovation
    if representation is Representation.SYMMETRIC:
        centered = ws.centered_x - gain @ ws.centered_z
        p_filt = centered @ centered.T + gain @ model.meas_cov @ gain.T
    else:
        p_filt = belief_pred.covariance() - gain @ r_e @ gain.T
    p_filt = 0.5 * (p_filt + p_filt.T)
    if not (np.all(np.isfinite(x_filt)) and np.all(np.isfinite(p_filt))):
        raise FilterDivergence("non-finite filtered moments")
    return GaussianBelief.from_dense(x_filt, p_filt)
