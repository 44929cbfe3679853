"""Assembled filters: traces, failure capture, determinism, equivalence."""

import numpy as np
import pytest

from hybridkf.belief import Representation
from hybridkf.filters import (
    FilterKind,
    FilterTrace,
    FilterVariant,
    equivalence_probe,
    run_filter,
)
from hybridkf.models import make_coordinated_turn, make_cstr
from hybridkf.truth import simulate_truth


def _short_tracking(seed=(5, 0), t_end=20.0, delta=2.0):
    model = make_coordinated_turn()
    truth = simulate_truth(model, t_end, 1e-2, delta, seed=seed)
    return model, truth


def test_variant_names():
    v = FilterVariant(FilterKind.HYBRID_NIRK, Representation.SPECTRAL)
    assert v.name == "hybrid-spectral"
    b = FilterVariant(
        FilterKind.FIXED_STEP_BASELINE, Representation.DENSE, m_subdivisions=64
    )
    assert b.name == "baseline64-dense"


def test_variant_validation():
    with pytest.raises(ValueError):
        FilterVariant(FilterKind.HYBRID_NIRK, Representation.DENSE, eps_g=0.0)
    with pytest.raises(ValueError):
        FilterVariant(
            FilterKind.FIXED_STEP_BASELINE, Representation.DENSE, m_subdivisions=0
        )


@pytest.mark.parametrize(
    "kind", [FilterKind.HYBRID_NIRK, FilterKind.FIXED_STEP_BASELINE]
)
def test_trace_shape_and_status(kind):
    model, truth = _short_tracking()
    v = FilterVariant(kind, Representation.SPECTRAL)
    trace = run_filter(v, model, truth)
    assert not trace.failed
    assert trace.estimates.shape == (truth.num_samples, model.state_dim)
    assert trace.step_status == ["ok"] * truth.num_samples
    assert trace.cpu_time > 0
    assert trace.covariances == []


def test_keep_covariances():
    model, truth = _short_tracking(t_end=6.0)
    v = FilterVariant(FilterKind.HYBRID_NIRK, Representation.DENSE)
    trace = run_filter(v, model, truth, keep_covariances=True)
    assert len(trace.covariances) == truth.num_samples
    for p in trace.covariances:
        assert p.shape == (7, 7)
        assert np.allclose(p, p.T)


def test_bitwise_determinism():
    model, truth = _short_tracking()
    v = FilterVariant(FilterKind.HYBRID_NIRK, Representation.SPECTRAL)
    a = run_filter(v, model, truth)
    b = run_filter(v, model, truth)
    assert a.estimates.tobytes() == b.estimates.tobytes()


def test_estimates_track_truth_on_easy_problem():
    model, truth = _short_tracking(t_end=40.0)
    v = FilterVariant(FilterKind.HYBRID_NIRK, Representation.SPECTRAL)
    trace = run_filter(v, model, truth)
    err = truth.true_states[:, [0, 2, 4]] - trace.estimates[:, [0, 2, 4]]
    rmse = np.sqrt(np.mean(np.sum(err**2, axis=1)))
    assert rmse < 200.0  # position error far below the scenario scale


def test_failure_is_captured_not_raised():
    # baseline with one Euler substep over a 12 s interval diverges on the
    # tracking problem; the trace must record the failure and truncate.
    model = make_coordinated_turn()
    truth = simulate_truth(model, 48.0, 1e-2, 12.0, seed=(5, 1))
    v = FilterVariant(
        FilterKind.FIXED_STEP_BASELINE,
        Representation.DENSE,
        m_subdivisions=1,
    )
    trace = run_filter(v, model, truth)
    if trace.failed:
        assert trace.failure_reason != ""
        assert trace.step_status[-1] == "failed"
        assert trace.estimates.shape[0] < truth.num_samples
    else:
        # if it limps through, the estimate must at least be finite
        assert np.all(np.isfinite(trace.estimates))


def test_hybrid_beats_coarse_baseline_on_cstr():
    model = make_cstr()
    truth = simulate_truth(model, 30.0, 1e-3, 2.0, seed=(8, 0))
    hybrid = run_filter(
        FilterVariant(FilterKind.HYBRID_NIRK, Representation.SPECTRAL),
        model,
        truth,
    )
    coarse = run_filter(
        FilterVariant(
            FilterKind.FIXED_STEP_BASELINE,
            Representation.SPECTRAL,
            m_subdivisions=2,
        ),
        model,
        truth,
    )
    assert not hybrid.failed
    err_h = np.sqrt(np.mean((truth.true_states - hybrid.estimates) ** 2))
    if not coarse.failed:
        err_c = np.sqrt(np.mean((truth.true_states - coarse.estimates) ** 2))
        assert err_h <= err_c * 1.5


def test_equivalence_probe_tracking():
    model, truth = _short_tracking(t_end=20.0)
    assert equivalence_probe(model, truth, eps_g=1e-4) < 1e-8


def test_equivalence_probe_cstr():
    model = make_cstr()
    truth = simulate_truth(model, 20.0, 1e-3, 2.0, seed=(8, 2))
    assert equivalence_probe(model, truth, eps_g=1e-4) < 1e-8
