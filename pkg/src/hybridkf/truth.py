"""Ground-truth trajectory and synthetic measurement generation.

The SDE is simulated with fine-step Euler-Maruyama; measurements are sampled
at multiples of the sampling period.  A counter-based RNG (Philox) keyed by
the seed makes every record reproducible regardless of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput, SimulationDiverged
from .linalg import spectral_from_dense
from .models import ContinuousDiscreteModel


@dataclass(frozen=True)
class TruthRecord:
    times: np.ndarray
    true_states: np.ndarray
    measurements: np.ndarray
    seed: tuple

    @property
    def num_samples(self) -> int:
        return self.times.shape[0]


def noise_sqrt(cov: np.ndarray) -> np.ndarray:
    """Any L with L L^T = cov; used only for sampling.

    Cholesky when the matrix is positive definite, otherwise the eigenvalue
    square root so that singular (e.g. zero) covariances remain usable.
    """
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        factors = spectral_from_dense(0.5 * (cov + cov.T))
        return factors.square_root()


def _rng_for(seed) -> np.random.Generator:
    key = np.atleast_1d(np.asarray(seed, dtype=np.uint64)).ravel()
    if key.size == 1:
        key = np.concatenate([key, np.zeros(1, dtype=np.uint64)])
    return np.random.Generator(np.random.Philox(key=key))


def simulate_truth(
    model: ContinuousDiscreteModel,
    t_end: float,
    dt: float,
    sampling_period: float,
    seed: int | Sequence[int],
    sample_initial: bool = False,
) -> TruthRecord:
    """Euler-Maruyama simulation of the SDE plus noisy sampled measurements.

    dt must divide the sampling period; any trailing partial interval beyond
    the last full sampling period is dropped.  By default the trajectory
    starts exactly at the model's initial mean so that every Monte Carlo run
    exercises the same scenario geometry and the initial covariance describes
    the estimator's prior only; pass sample_initial=True to draw the start
    from N(initial_mean, initial_cov) instead.
    """
    if dt <= 0:
        raise InvalidInput(f"stepsize must be positive, got {dt}")
    steps_per = sampling_period / dt
    if abs(steps_per - round(steps_per)) > 1e-9 * max(1.0, steps_per):
        raise InvalidInput(
            f"dt={dt} does not divide the sampling period {sampling_period}"
        )
    steps_per = int(round(steps_per))
    num_samples = int(np.floor(t_end / sampling_period + 1e-9))
    if num_samples < 1:
        raise InvalidInput("horizon shorter than one sampling period")

    rng = _rng_for(seed)
    x = model.initial_mean.astype(float).copy()
    if sample_initial:
        x = x + noise_sqrt(model.initial_cov) @ rng.standard_normal(model.state_dim)
    # G sqrt(dt) Q^{1/2}, applied to unit normals each step
    gl = model.diffusion @ noise_sqrt(model.process_cov) * np.sqrt(dt)
    r_sqrt = noise_sqrt(model.meas_cov)

    times = sampling_period * np.arange(1, num_samples + 1)
    states = np.empty((num_samples, model.state_dim))
    meas = np.empty((num_samples, model.meas_dim))
    f = model.drift

    for k in range(num_samples):
        xi = rng.standard_normal((steps_per, model.noise_dim))
        t = k * sampling_period
        # A diverging trajectory overflows before the finite check catches
        # it; the transient warnings carry no information.
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(steps_per):
                x = x + f(t, x) * dt + gl @ xi[i]
                t += dt
        if not np.all(np.isfinite(x)):
            raise SimulationDiverged(time=times[k])
        states[k] = x
        meas[k] = model.measurement(k + 1, x) + r_sqrt @ rng.standard_normal(
            model.meas_dim
        )

    seed_tuple = tuple(np.atleast_1d(np.asarray(seed)).tolist())
    return TruthRecord(
        times=times, true_states=states, measurements=meas, seed=seed_tuple
    )


def dump_truth_csv(record: TruthRecord, path) -> None:
    """Debug dump: one row per sampling instant (t, x_1..x_n, z_1..z_m)."""
    n = record.true_states.shape[1]
    m = record.measurements.shape[1]
    header = ",".join(
        ["t"] + [f"x_{i+1}" for i in range(n)] + [f"z_{j+1}" for j in range(m)]
    )
    data = np.column_stack([record.times, record.true_states, record.measurements])
    np.savetxt(path, data, delimiter=",", header=header, comments="")
