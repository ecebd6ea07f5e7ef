import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noontrack.bounds import phase_crb
from noontrack.estimation import (
    UNIFORM_PHI_SD,
    EstimatorConfig,
    PosteriorGrid,
    estimate_batch,
    likelihood,
    point_estimate,
    update_posterior,
    wrap_phase,
)
from noontrack.optics import MeasurementSetting
from noontrack.photon_sim import CountBatch, simulate_counts

S0 = MeasurementSetting(0.0)


def batch(counts, setting=S0, t=0.0):
    return CountBatch(t, setting, tuple(counts), 1.0)


def sim_batch(phi, v, m, seed, theta0=math.pi / 32, t=0.0):
    s = MeasurementSetting(theta0)
    return CountBatch(t, s, simulate_counts(s, phi, v, m, seed), 1.0)


def test_likelihood_flat_at_zero_visibility():
    phis = np.linspace(-1, 1, 17)
    ll = likelihood(batch((1, 1, 1, 1)), phis, 0.0)
    assert np.allclose(ll, 4 * math.log(0.25), atol=1e-14)


def test_likelihood_peaks_at_bright_port():
    # all counts in outcome 0 at theta0 = 0: maximal where cos(2 phi) = 1
    phis = np.linspace(-math.pi / 2, math.pi / 2, 181)
    ll = likelihood(batch((10, 0, 0, 0)), phis, 0.9)
    assert abs(phis[np.argmax(ll)]) < 1e-12


def test_likelihood_zero_probability_is_floored():
    ll = likelihood(batch((0, 0, 5, 0)), 0.0, 1.0)
    assert np.isfinite(ll) and ll < -100


def test_likelihood_empty_batch_warns():
    with pytest.warns(RuntimeWarning):
        ll = likelihood(batch((0, 0, 0, 0)), np.zeros(3), 0.5)
    assert np.all(ll == 0)


def test_zero_events_leave_grid_unchanged():
    g = PosteriorGrid.uniform(0.1, 64, 11)
    assert update_posterior(g, batch((0, 0, 0, 0))) is g


def test_grid_argmax_near_truth():
    b = sim_batch(0.3, 0.9, 74_000, seed=1)
    g = update_posterior(PosteriorGrid.uniform(0.3), b)
    i, j = np.unravel_index(np.argmax(g.weights), g.weights.shape)
    assert abs(g.phi_axis[i] - 0.3) <= 2 * g.phi_step
    assert abs(g.v_axis[j] - 0.9) <= 2 * g.v_step


def test_weights_normalized_and_nonnegative():
    g = update_posterior(PosteriorGrid.uniform(), sim_batch(-0.2, 0.7, 500, seed=2))
    assert g.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(g.weights >= 0)


def test_split_batches_equal_combined():
    s = MeasurementSetting(0.05)
    a, b = (3000, 1200, 900, 2100), (2800, 1300, 1000, 2050)
    g = PosteriorGrid.uniform(0.0, 128, 21)
    split = update_posterior(update_posterior(g, CountBatch(0, s, a, 1.0)), CountBatch(1, s, b, 1.0))
    both = update_posterior(g, CountBatch(0, s, tuple(x + y for x, y in zip(a, b)), 1.0))
    assert np.allclose(split.weights, both.weights, atol=1e-10, rtol=0)


def test_uniform_posterior_is_uninformative():
    g = PosteriorGrid.uniform(0.2, 256, 11)
    est = point_estimate(g)
    assert "uninformative" in est.flags
    assert est.phi_sd == pytest.approx(UNIFORM_PHI_SD, rel=1e-3)


def test_delta_posterior_sd_floored_at_quantization():
    g = PosteriorGrid.uniform(0.0, 64, 5)
    w = np.zeros_like(g.weights)
    w[20, 3] = 1.0
    est = point_estimate(PosteriorGrid(g.phi_axis, g.v_axis, w, 0.0))
    assert est.phi_hat == pytest.approx(g.phi_axis[20])
    assert est.phi_sd == pytest.approx(g.phi_step / math.sqrt(12))
    assert est.v_sd == 0.0


def test_estimate_reported_inside_window():
    b = sim_batch(1.7, 0.9, 20_000, seed=5)
    est, _ = estimate_batch(b, center=1.7)
    assert 1.7 - math.pi / 2 <= est.phi_hat < 1.7 + math.pi / 2
    assert abs(est.phi_hat - 1.7) < 5 * est.phi_sd
    assert est.window_center == 1.7
    # the same data seen through the default window aliases by one period
    est0, _ = estimate_batch(b, center=0.0)
    assert abs(est0.phi_hat - (1.7 - math.pi)) < 5 * est0.phi_sd


def test_wrap_phase():
    assert wrap_phase(math.pi / 2, 0.0) == pytest.approx(-math.pi / 2)
    assert wrap_phase(1.0 + 3 * math.pi, 1.0) == pytest.approx(1.0)


def test_four_angles_resolve_sign_ambiguity():
    # a single analyzer angle cannot tell phi from -phi; the quadrature outcomes can
    b = CountBatch(0.0, S0, simulate_counts(S0, 0.05, 0.9, 2000, 7), 1.0)
    est, _ = estimate_batch(b, center=0.0)
    assert not est.bimodal
    assert abs(est.phi_hat - 0.05) < 4 * est.phi_sd


def test_two_equal_peaks_flagged_bimodal():
    g = PosteriorGrid.uniform(0.0, 256, 3)
    phi = g.phi_axis[:, None]
    w = np.exp(-((phi - 0.5) ** 2) / 0.005) + 0.9 * np.exp(-((phi + 0.6) ** 2) / 0.005)
    w = np.repeat(w, 3, axis=1)
    est = point_estimate(PosteriorGrid(g.phi_axis, g.v_axis, w / w.sum(), 0.0))
    assert est.bimodal


@pytest.mark.parametrize("phi, v", [(0.3, 0.9), (-0.7, 0.6), (0.05, 0.95)])
def test_posterior_sd_matches_crb(phi, v):
    theta0 = ((math.pi / 4 - 2 * phi) / 8) % (math.pi / 4)
    m = 20_000
    est, _ = estimate_batch(sim_batch(phi, v, m, seed=11, theta0=theta0), center=phi)
    assert est.phi_sd == pytest.approx(phase_crb(theta0, phi, v, m), rel=0.25)
    assert est.n_events == m


def test_coverage_and_bias():
    rng = np.random.default_rng(0)
    phi, v = 0.3, 0.9
    errs, hits = [], 0
    for _ in range(150):
        est, _ = estimate_batch(sim_batch(phi, v, 20_000, rng), center=phi)
        errs.append(est.phi_hat - phi)
        hits += abs(est.phi_hat - phi) <= est.phi_sd
    errs = np.array(errs)
    assert 0.58 <= hits / 150 <= 0.78
    assert abs(errs.mean()) < 4 * errs.std() / math.sqrt(len(errs))


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.3, 1.0), st.integers(0, 10_000))
def test_estimate_well_formed(phi, v, seed):
    est, grid = estimate_batch(sim_batch(phi, v, 2000, seed), center=phi)
    assert est.phi_sd > 0 and math.isfinite(est.phi_hat)
    assert 0.0 <= est.v_hat <= 1.0
    assert grid.weights.sum() == pytest.approx(1.0)


def test_sequential_prior_accumulates_events():
    cfg = EstimatorConfig(n_phi=256, n_v=51, sequential_prior=True)
    b1, b2 = sim_batch(0.2, 0.9, 5000, 1), sim_batch(0.2, 0.9, 5000, 2, t=1.0)
    e1, g1 = estimate_batch(b1, 0.2, cfg)
    e2, _ = estimate_batch(b2, 0.2, cfg, prior=g1)
    assert e2.n_events == 10_000
    assert e2.phi_sd < e1.phi_sd


def test_estimator_config_validation():
    with pytest.raises(ValueError):
        EstimatorConfig(n_phi=4)


def test_no_runtime_warnings_on_normal_data():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        estimate_batch(sim_batch(0.1, 0.95, 74_000, 3), center=0.1)
