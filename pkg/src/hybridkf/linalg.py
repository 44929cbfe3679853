"""Dense linear-algebra kernels: SVD post-arrays and the spectral covariance form.

A covariance is carried as P = Q diag(d)^2 Q^T with orthogonal Q and
non-negative, non-increasing d (square roots of the singular values).
Every covariance update in the square-root filters reduces to one SVD of a
rectangular pre-array whose Gram matrix equals the updated covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotPositiveSemiDefinite, NumericalFailure

_EPS = np.finfo(float).eps


def _fix_column_signs(w: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive.

    Makes factor comparisons deterministic; the Gram product w diag(s^2) w^T
    is invariant under column sign flips.
    """
    idx = np.argmax(np.abs(w), axis=0)
    signs = np.sign(w[idx, np.arange(w.shape[1])])
    signs[signs == 0] = 1.0
    return w * signs


@dataclass(frozen=True)
class SpectralFactors:
    """Orthogonal/diagonal square-root representation of a covariance.

    q_factor : (n, n) orthogonal
    d_sqrt   : (n,) non-negative, non-increasing
    """

    q_factor: np.ndarray
    d_sqrt: np.ndarray

    @property
    def dim(self) -> int:
        return self.d_sqrt.shape[0]

    def square_root(self) -> np.ndarray:
        """S = Q diag(d_sqrt), so that S S^T reconstructs the covariance."""
        return self.q_factor * self.d_sqrt

    def reconstruct(self) -> np.ndarray:
        return (self.q_factor * self.d_sqrt**2) @ self.q_factor.T


def svd_post_arrays(pre: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decompose an r x c pre-array (r <= c) into its left SVD factors.

    Returns (w, s) with orthogonal w (r x r) and non-increasing s (r,) such
    that w diag(s)^2 w^T = pre pre^T.  The right factor is discarded.
    """
    pre = np.asarray(pre, dtype=float)
    if pre.ndim != 2 or pre.shape[0] > pre.shape[1]:
        raise InvalidInput(f"pre-array must be r x c with r <= c, got {pre.shape}")
    if not np.all(np.isfinite(pre)):
        raise InvalidInput("pre-array has non-finite entries")
    try:
        w, s, _ = np.linalg.svd(pre, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    return _fix_column_signs(w), s


def spectral_from_dense(p: np.ndarray) -> SpectralFactors:
    """Factor a symmetric PSD matrix into SpectralFactors.

    Eigenvalues in [-1e-12 * ||p||, 0) are clamped to zero; anything below
    that raises NotPositiveSemiDefinite.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise InvalidInput(f"expected a square matrix, got {p.shape}")
    scale = np.linalg.norm(p)
    if not np.all(np.isfinite(p)):
        raise InvalidInput("matrix has non-finite entries")
    if np.max(np.abs(p - p.T)) > 1e-10 * max(scale, _EPS):
        raise InvalidInput("matrix is not symmetric within 1e-10 relative")
    try:
        eigvals, eigvecs = np.linalg.eigh(0.5 * (p + p.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    tol = 1e-12 * max(scale, _EPS)
    if eigvals[0] < -tol:
        raise NotPositiveSemiDefinite(
            f"minimum eigenvalue {eigvals[0]:.3e} below -{tol:.3e}"
        )
    eigvals = np.clip(eigvals, 0.0, None)
    order = np.argsort(eigvals)[::-1]
    q = _fix_column_signs(eigvecs[:, order])
    return SpectralFactors(q_factor=q, d_sqrt=np.sqrt(eigvals[order]))


def thresholded_reciprocal(s: np.ndarray, rows: int) -> np.ndarray:
    """Pseudo-inverse of a non-increasing non-negative diagonal.

    Entries at or below rows * eps * s[0] are treated as numerically zero and
    map to zero instead of blowing up.
    """
    s = np.asarray(s, dtype=float)
    if s.size == 0:
        return s.copy()
    cutoff = rows * _EPS * s[0]
    out = np.zeros_like(s)
    mask = s > cutoff
    # Denormal inputs can pass the relative cutoff yet overflow on inversion;
    # such directions carry no usable information either.
    with np.errstate(over="ignore"):
        out[mask] = 1.0 / s[mask]
    out[~np.isfinite(out)] = 0.0
    return out
