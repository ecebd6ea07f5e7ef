import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noontrack.optics import (
    MeasurementSetting,
    ProbeModel,
    amplitude_oracle_coincidence,
    fringe_probability,
    noon_state_after_sample,
    oracle_state_from_rotation,
    setting_probabilities,
    single_photon_transmission,
)

angles = st.floats(-10.0, 10.0, allow_nan=False)
visibilities = st.floats(0.0, 1.0)


@pytest.mark.parametrize(
    "phi, expected",
    [
        (0.0, (1.0, 0.0, 0.0)),
        (math.pi / 2, (0.0, -1 / math.sqrt(2), 1 / math.sqrt(2))),
        (math.pi / 4, (math.sqrt(2) / 2, -0.5, 0.5)),
    ],
)
def test_noon_state_examples(phi, expected):
    st_ = noon_state_after_sample(phi)
    assert (st_.amplitude_HV, st_.amplitude_HH, st_.amplitude_VV) == pytest.approx(expected, abs=1e-15)


@given(angles)
def test_noon_state_normalized_and_matches_photon_rotation(phi):
    a = noon_state_after_sample(phi)
    assert abs(a.norm() - 1.0) < 1e-12
    b = oracle_state_from_rotation(phi)
    assert b.amplitude_HV == pytest.approx(a.amplitude_HV, abs=1e-12)
    assert b.amplitude_HH == pytest.approx(a.amplitude_HH, abs=1e-12)
    assert b.amplitude_VV == pytest.approx(a.amplitude_VV, abs=1e-12)


def test_noon_state_rejects_nonfinite():
    with pytest.raises(ValueError):
        noon_state_after_sample(float("nan"))


@pytest.mark.parametrize(
    "theta, phi, v, expected",
    [(0.0, 0.0, 1.0, 0.5), (math.pi / 16, 0.0, 1.0, 0.25), (0.1, 0.3, 0.0, 0.25)],
)
def test_fringe_probability_examples(theta, phi, v, expected):
    assert fringe_probability(theta, phi, v) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("v", [-0.01, 1.01, float("nan")])
def test_fringe_probability_rejects_bad_visibility(v):
    with pytest.raises(ValueError):
        fringe_probability(0.0, 0.0, v)


@given(angles, angles, visibilities)
def test_fringe_probability_range(theta, phi, v):
    p = fringe_probability(theta, phi, v)
    assert -1e-15 <= p <= 0.5 + 1e-15


def test_fringe_periods_random_triples():
    rng = np.random.default_rng(11)
    theta, phi = rng.uniform(-5, 5, (2, 1000))
    v = rng.uniform(0, 1, 1000)
    base = fringe_probability(theta, phi, v)
    assert np.allclose(fringe_probability(theta + math.pi / 4, phi, v), base, atol=1e-12, rtol=0)
    assert np.allclose(fringe_probability(theta, phi + math.pi, v), base, atol=1e-12, rtol=0)


def test_measurement_setting_angles_and_reduction():
    s = MeasurementSetting(math.pi / 4 + 0.01)
    assert s.theta0 == pytest.approx(0.01, abs=1e-15)
    assert s.angles == pytest.approx([0.01 + k * math.pi / 16 for k in range(4)], abs=1e-15)
    assert 0.0 <= MeasurementSetting(-1e-3).theta0 < math.pi / 4
    assert MeasurementSetting(-1e-20).theta0 < math.pi / 4


def test_setting_probabilities_examples():
    assert setting_probabilities(MeasurementSetting(0.0), 0.0, 1.0) == pytest.approx([0.5, 0.25, 0.0, 0.25], abs=1e-15)
    assert setting_probabilities(MeasurementSetting(0.3), 1.1, 0.0) == pytest.approx([0.25] * 4)
    # theta0 = 0, phi = pi/8: arguments pi/4, 3pi/4, 5pi/4, 7pi/4
    expected = [0.25 * (1 + math.cos(math.pi / 4 + k * math.pi / 2)) for k in range(4)]
    got = setting_probabilities(MeasurementSetting(0.0), math.pi / 8, 1.0)
    assert got == pytest.approx(expected, abs=1e-15)
    assert got == pytest.approx([0.25 * (1 + r) for r in (0.5**0.5, -(0.5**0.5), -(0.5**0.5), 0.5**0.5)])
    assert sum(got) == pytest.approx(1.0, abs=1e-15)


def test_setting_probabilities_match_fringe_probability():
    s = MeasurementSetting(0.123)
    direct = [fringe_probability(th, 0.7, 0.8) for th in s.angles]
    assert setting_probabilities(s, 0.7, 0.8) == pytest.approx(direct, abs=1e-14)


@settings(max_examples=300)
@given(st.floats(0, math.pi / 4, exclude_max=True), angles, visibilities)
def test_setting_probabilities_normalized(theta0, phi, v):
    assert abs(float(np.sum(setting_probabilities(MeasurementSetting(theta0), phi, v))) - 1.0) < 1e-12


@pytest.mark.parametrize("theta, expected", [(0.0, 1.0), (math.pi / 16, 0.5), (math.pi / 8, 0.0)])
def test_oracle_examples(theta, expected):
    assert amplitude_oracle_coincidence(theta, 0.0) == pytest.approx(expected, abs=1e-15)


def test_oracle_equivalence_random():
    rng = np.random.default_rng(5)
    for theta, phi in rng.uniform(-4, 4, (1000, 2)):
        closed = 4 * fringe_probability(theta, phi, 1.0) / 2
        assert abs(amplitude_oracle_coincidence(theta, phi) - closed) < 1e-12


def test_doubled_fringe_frequency():
    # the N00N fringe repeats after pi/4 in theta, the single-photon fringe only after pi/2
    phi = 0.37
    thetas = np.linspace(0, math.pi, 97)
    noon = np.array([amplitude_oracle_coincidence(t, phi) for t in thetas])
    noon_shift = np.array([amplitude_oracle_coincidence(t + math.pi / 4, phi) for t in thetas])
    single = np.array([single_photon_transmission(t, phi) for t in thetas])
    single_q = np.array([single_photon_transmission(t + math.pi / 4, phi) for t in thetas])
    single_h = np.array([single_photon_transmission(t + math.pi / 2, phi) for t in thetas])
    assert np.allclose(noon, noon_shift, atol=1e-12)
    assert np.allclose(single, single_h, atol=1e-12)
    assert not np.allclose(single, single_q, atol=1e-3)
    assert np.allclose(single, np.cos(2 * thetas + phi / 2) ** 2, atol=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [dict(photon_number=0), dict(visibility=1.2), dict(efficiency=0.0), dict(efficiency=1.5), dict(flux=0.0)],
)
def test_probe_model_invariants(kwargs):
    with pytest.raises(ValueError):
        ProbeModel(**kwargs)
