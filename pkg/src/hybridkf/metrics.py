"""Accumulated RMSE metrics over Monte Carlo runs.

ARMSE = sqrt( (1/(M K)) sum_runs sum_steps sum_components err^2 ) where the
component sum ranges over the position entries (tracking) or the full state.
Runs that failed hard are excluded from the average and force the failed
flag; for tracking a finite threshold on the positional ARMSE also declares
failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput
from .filters import FilterTrace
from .truth import TruthRecord

POSITION_INDICES = (0, 2, 4)  # eps, eta, zeta in the tracking state
TRACKING_FAILURE_ARMSE = 500.0


@dataclass(frozen=True)
class MetricReport:
    armse: float
    per_component_armse: np.ndarray
    failed: bool
    runs_used: int


def _accumulate(
    truths: Sequence[TruthRecord],
    traces: Sequence[FilterTrace],
    indices: Sequence[int],
    threshold: float | None,
) -> MetricReport:
    if len(truths) == 0 or len(truths) != len(traces):
        raise InvalidInput("need equally many non-empty truths and traces")
    indices = list(indices)
    sq_sum = np.zeros(len(indices))
    count = 0
    runs_used = 0
    any_hard_failure = False
    for truth, trace in zip(truths, traces):
        if trace.failed or trace.estimates.shape[0] != truth.num_samples:
            any_hard_failure = True
            continue
        err = truth.true_states[:, indices] - trace.estimates[:, indices]
        sq_sum += np.sum(err**2, axis=0)
        count += truth.num_samples
        runs_used += 1
    if runs_used == 0:
        per_comp = np.full(len(indices), np.inf)
        armse = np.inf
    else:
        per_comp = np.sqrt(sq_sum / count)
        armse = float(np.sqrt(np.sum(sq_sum) / count))
    failed = any_hard_failure or not np.isfinite(armse)
    if threshold is not None and armse > threshold:
        failed = True
    return MetricReport(
        armse=armse,
        per_component_armse=per_comp,
        failed=failed,
        runs_used=runs_used,
    )


def armse_position(
    truths: Sequence[TruthRecord],
    traces: Sequence[FilterTrace],
    threshold: float = TRACKING_FAILURE_ARMSE,
) -> MetricReport:
    """Positional ARMSE over position components, failure above threshold."""
    return _accumulate(truths, traces, POSITION_INDICES, threshold)


def armse_all(
    truths: Sequence[TruthRecord],
    traces: Sequence[FilterTrace],
    threshold: float | None = None,
) -> MetricReport:
    """All-state ARMSE; by default only hard failures mark the report failed."""
    n = truths[0].true_states.shape[1] if truths else 0
    return _accumulate(truths, traces, range(n), threshold)
