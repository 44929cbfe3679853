"""Embedded nested implicit Runge-Kutta pair of orders (4, 6).

The advancing formula uses three Gauss-Legendre nodes; stage values are
expressed through the step endpoints by Hermite-type interpolation:

  second level: cubic interpolation through (x_l, x_{l+1}) values and
                endpoint derivatives, evaluated at the two Gauss-2 nodes;
  third level:  quintic interpolation additionally matching the derivatives
                at the second-level nodes, evaluated at the three Gauss-3
                nodes (the middle one sits exactly at t_l + tau/2).

The only implicit unknown is the step endpoint, solved by simplified Newton
with the Jacobian frozen at the step start.  The lower-order companion
supplies the local error estimate; a signed accumulation of local errors
tracks the global error over the interval, and the interval is re-integrated
with a tightened local tolerance whenever the accumulated estimate misses the
user tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import (
    AccuracyNotAttainable,
    InvalidInput,
    NumericalFailure,
    StepBudgetExceeded,
    StepRejected,
)

MAX_NEWTON_ITERS = 50
EPS_LOC_FLOOR = 1e-14
DEFAULT_STEP_CAP = 10**6
# Controller limits: growth <= 5x, shrink >= 0.1x, safety 0.9, exponent 1/5
# matching the order-4 error estimate.
_GROW, _SHRINK, _SAFETY, _EXPONENT = 5.0, 0.1, 0.9, 0.2


@dataclass(frozen=True)
class NirkCoefficients:
    """Tableau of the nested pair; all entries dimensionless."""

    a2: np.ndarray  # (2, 2) endpoint-value weights, second level
    d2: np.ndarray  # (2, 2) endpoint-derivative weights, second level
    a3: np.ndarray  # (3, 2) endpoint-value weights, third level
    d3: np.ndarray  # (3, 4) derivative weights, third level
    b: np.ndarray   # (3,)  advancing quadrature weights
    c2: np.ndarray  # (2,)  second-level nodes
    c3: np.ndarray  # (3,)  third-level nodes; c3[1] == 1/2 exactly


def _hermite_cubic_weights(c: float) -> tuple[float, float, float, float]:
    """p(c) from p(0), p(1), p'(0), p'(1) for cubic p on [0, 1]."""
    return (
        1.0 - 3.0 * c**2 + 2.0 * c**3,
        3.0 * c**2 - 2.0 * c**3,
        c - 2.0 * c**2 + c**3,
        -(c**2) + c**3,
    )


def _quintic_weights(c: float, g1: float, g2: float) -> np.ndarray:
    """p(c) from p(0), p(1), p'(0), p'(1), p'(g1), p'(g2) for quintic p."""
    sys = np.zeros((6, 6))
    rhs = np.zeros(6)
    for k in range(6):
        sys[k, 0] = 1.0 if k == 0 else 0.0
        sys[k, 1] = 1.0
        if k >= 1:
            sys[k, 2] = 1.0 if k == 1 else 0.0
            sys[k, 3] = k
            sys[k, 4] = k * g1 ** (k - 1)
            sys[k, 5] = k * g2 ** (k - 1)
        rhs[k] = c**k
    return np.linalg.solve(sys, rhs)


@lru_cache(maxsize=1)
def gauss_nirk_pair() -> NirkCoefficients:
    """Construct the Gauss-type (4, 6) tableau."""
    g1 = 0.5 - np.sqrt(3.0) / 6.0
    g2 = 1.0 - g1
    c3 = np.array([0.5 - np.sqrt(15.0) / 10.0, 0.5, 0.5 + np.sqrt(15.0) / 10.0])
    b = np.array([5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0])
    a2 = np.empty((2, 2))
    d2 = np.empty((2, 2))
    for i, c in enumerate((g1, g2)):
        a2[i, 0], a2[i, 1], d2[i, 0], d2[i, 1] = _hermite_cubic_weights(c)
    a3 = np.empty((3, 2))
    d3 = np.empty((3, 4))
    for j, c in enumerate(c3):
        w = _quintic_weights(c, g1, g2)
        a3[j] = w[:2]
        d3[j] = w[2:]
    return NirkCoefficients(
        a2=a2, d2=d2, a3=a3, d3=d3, b=b, c2=np.array([g1, g2]), c3=c3
    )


@dataclass
class StepOutcome:
    x_next: np.ndarray
    x_mid: np.ndarray  # third-level middle stage, at t_l + tau/2
    le: np.ndarray
    accepted: bool
    tau_used: float
    tau_next: float


@dataclass(frozen=True)
class AdaptiveMesh:
    nodes: np.ndarray

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def num_steps(self) -> int:
        return self.nodes.shape[0] - 1


@dataclass
class IntegrationResult:
    x_end: np.ndarray
    mesh: AdaptiveMesh
    mid_states: list[np.ndarray]
    global_err: np.ndarray
    # per accepted step, for property tests
    scaled_local_errors: list[float] = field(default_factory=list)
    eps_loc: float = 0.0


def scaled_norm(vec: np.ndarray, ref: np.ndarray) -> float:
    """max_i |vec_i| / (|ref_i| + 1)."""
    return float(np.max(np.abs(vec) / (np.abs(ref) + 1.0)))


def nirk_step(
    f: Callable,
    jac: Callable,
    t_l: float,
    x_l: np.ndarray,
    tau: float,
    tol_newton: float,
    coeffs: NirkCoefficients | None = None,
    f_l: np.ndarray | None = None,
) -> StepOutcome:
    """One implicit step of size tau from (t_l, x_l).

    Raises StepRejected if the simplified Newton iteration fails to converge
    or its matrix is singular.
    """
    if tau <= 0:
        raise InvalidInput(f"step size must be positive, got {tau}")
    cf = coeffs if coeffs is not None else gauss_nirk_pair()
    n = x_l.shape[0]
    fl = f(t_l, x_l) if f_l is None else f_l
    t_next = t_l + tau

    # Newton matrix: dPhi/dy = tau * sum_j b_j F dX3_j/dy - I with F frozen.
    big_f = np.asarray(jac(t_l, x_l), dtype=float)
    t_mat = tau * big_f
    eye = np.eye(n)
    dx2 = [cf.a2[i, 1] * eye + cf.d2[i, 1] * t_mat for i in range(2)]
    newton = -eye.copy()
    for j in range(3):
        dx3_j = (
            cf.a3[j, 1] * eye
            + cf.d3[j, 1] * t_mat
            + cf.d3[j, 2] * (t_mat @ dx2[0])
            + cf.d3[j, 3] * (t_mat @ dx2[1])
        )
        newton += cf.b[j] * (t_mat @ dx3_j)
    try:
        lu = lu_factor(newton)
    except ValueError as exc:
        raise StepRejected(f"Newton matrix assembly failed: {exc}") from exc
    if np.any(np.abs(np.diag(lu[0])) < np.finfo(float).tiny):
        raise StepRejected("singular Newton matrix")

    def stages(y: np.ndarray):
        fe = f(t_next, y)
        x2 = [
            cf.a2[i, 0] * x_l
            + cf.a2[i, 1] * y
            + tau * (cf.d2[i, 0] * fl + cf.d2[i, 1] * fe)
            for i in range(2)
        ]
        f2 = [f(t_l + cf.c2[i] * tau, x2[i]) for i in range(2)]
        x3 = [
            cf.a3[j, 0] * x_l
            + cf.a3[j, 1] * y
            + tau
            * (
                cf.d3[j, 0] * fl
                + cf.d3[j, 1] * fe
                + cf.d3[j, 2] * f2[0]
                + cf.d3[j, 3] * f2[1]
            )
            for j in range(3)
        ]
        f3 = [f(t_l + cf.c3[j] * tau, x3[j]) for j in range(3)]
        return fe, x3, f3

    y = x_l + tau * fl
    converged = False
    # Divergent iterates legitimately overflow on stiff problems before the
    # finite check rejects the step; silence the transient warnings.
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(MAX_NEWTON_ITERS):
            fe, x3, f3 = stages(y)
            residual = (
                x_l
                + tau * (cf.b[0] * f3[0] + cf.b[1] * f3[1] + cf.b[2] * f3[2])
                - y
            )
            if not np.all(np.isfinite(residual)):
                raise StepRejected("non-finite Newton residual")
            y = y - lu_solve(lu, residual)
            if scaled_norm(residual, y) <= tol_newton:
                converged = True
                break
        if not converged:
            raise StepRejected("Newton iteration did not converge")

        fe, x3, f3 = stages(y)
    le = (tau / 3.0) * (
        (2.0 / 3.0) * f3[1]
        - (5.0 / 6.0) * f3[0]
        - (5.0 / 6.0) * f3[2]
        + 0.5 * fl
        + 0.5 * fe
    )
    return StepOutcome(
        x_next=y, x_mid=x3[1], le=le, accepted=True, tau_used=tau, tau_next=tau
    )


def _initial_step(f, t0, t_end, x0, f0) -> float:
    """Span/10 capped by a local curvature probe."""
    span = t_end - t0
    tau = span / 10.0
    scale = np.abs(x0) + 1.0
    slope = float(np.max(np.abs(f0) / scale))
    if slope > 0:
        tau = min(tau, 0.5 / slope)
    probe = min(tau, span) * 0.1
    if probe > 0:
        f1 = f(t0 + probe, x0 + probe * f0)
        curv = float(np.max(np.abs(f1 - f0) / scale)) / probe
        if curv > 0:
            tau = min(tau, np.sqrt(2.0 * 0.1 / curv))
    return max(tau, 1e-12 * max(span, 1.0))


def integrate_interval(
    f: Callable,
    jac: Callable,
    t_start: float,
    t_end: float,
    x_start: np.ndarray,
    eps_g: float,
    coeffs: NirkCoefficients | None = None,
    max_steps: int = DEFAULT_STEP_CAP,
    on_restart: Callable[[], None] | None = None,
    on_step: Callable[[float, float, np.ndarray, np.ndarray, np.ndarray], None]
    | None = None,
) -> IntegrationResult:
    """Adaptive integration of x' = f over [t_start, t_end].

    Local error per step is held below eps_loc; the signed accumulation of
    local errors estimates the global error.  If the scaled global error at
    t_end exceeds eps_g the interval is re-integrated with eps_loc halved,
    down to a floor of 1e-14.

    on_restart is invoked at the start of every attempt; on_step after every
    accepted step with (t_l, tau, x_l, x_mid, x_next) and may raise
    StepRejected to veto the step.
    """
    if t_end <= t_start:
        raise InvalidInput("interval must have positive length")
    if eps_g <= 0:
        raise InvalidInput("tolerance must be positive")
    x_start = np.asarray(x_start, dtype=float)
    cf = coeffs if coeffs is not None else gauss_nirk_pair()

    budget = max_steps
    eps_loc = eps_g
    while True:
        result = _attempt(
            f, jac, t_start, t_end, x_start, eps_loc, cf, budget, on_restart, on_step
        )
        budget = result[1]
        res: IntegrationResult = result[0]
        achieved = scaled_norm(res.global_err, res.x_end)
        if achieved <= eps_g:
            res.eps_loc = eps_loc
            return res
        if eps_loc / 2.0 < EPS_LOC_FLOOR:
            raise AccuracyNotAttainable(achieved=achieved, target=eps_g)
        eps_loc /= 2.0


def _attempt(
    f, jac, t_start, t_end, x_start, eps_loc, cf, budget, on_restart, on_step
) -> tuple[IntegrationResult, int]:
    if on_restart is not None:
        on_restart()
    tol_newton = 0.01 * eps_loc
    x = x_start.copy()
    t = t_start
    f0 = f(t_start, x_start)
    tau = _initial_step(f, t_start, t_end, x_start, f0)
    nodes = [t_start]
    mids: list[np.ndarray] = []
    les: list[float] = []
    ghat = np.zeros_like(x_start)
    span = t_end - t_start

    while t < t_end:
        last = t + tau >= t_end - 1e-14 * span
        tau_try = (t_end - t) if last else tau
        if tau_try <= 0 or not np.isfinite(tau_try):
            raise NumericalFailure("step size underflow")
        budget -= 1
        if budget < 0:
            raise StepBudgetExceeded("integrator step cap exhausted")
        try:
            out = nirk_step(f, jac, t, x, tau_try, tol_newton, coeffs=cf)
        except StepRejected:
            tau = tau_try / 2.0
            continue
        if not np.all(np.isfinite(out.x_next)):
            tau = tau_try / 2.0
            continue
        le_sc = scaled_norm(out.le, out.x_next)
        if le_sc > eps_loc:
            tau = tau_try * min(
                1.0, max(_SHRINK, _SAFETY * (eps_loc / le_sc) ** _EXPONENT)
            )
            continue
        if on_step is not None:
            try:
                on_step(t, tau_try, x, out.x_mid, out.x_next)
            except StepRejected:
                tau = tau_try / 2.0
                continue
        t = t_end if last else t + tau_try
        x = out.x_next
        ghat = ghat - out.le
        nodes.append(t)
        mids.append(out.x_mid)
        les.append(le_sc)
        grow = _GROW if le_sc == 0 else min(
            _GROW, max(_SHRINK, _SAFETY * (eps_loc / le_sc) ** _EXPONENT)
        )
        tau = tau_try * grow

    return (
        IntegrationResult(
            x_end=x,
            mesh=AdaptiveMesh(nodes=np.array(nodes)),
            mid_states=mids,
            global_err=ghat,
            scaled_local_errors=les,
        ),
        budget,
    )
