import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from noontrack.kinetics import (
    KineticsModel,
    concentration_at,
    concentration_from_phase,
    concentration_sd,
    inhibition_scenario,
    phase_at,
)

MODEL = KineticsModel(phi_initial=0.127, phi_final=-0.038, tau=900.0, t0=0.0, c_initial=0.8)


def test_phase_endpoints():
    assert phase_at(MODEL, 0.0) == MODEL.phi_initial
    assert phase_at(MODEL, 1e7) == pytest.approx(MODEL.phi_final, abs=1e-15)


def test_full_inhibition_freezes_reaction():
    m = KineticsModel(0.3, -0.1, 100.0, inhibition=1.0)
    assert np.allclose(phase_at(m, np.linspace(0, 1e4, 50)), 0.3, rtol=0, atol=1e-15)


def test_phase_rejects_time_before_t0():
    with pytest.raises(ValueError):
        phase_at(KineticsModel(0.1, 0.0, 10.0, t0=5.0), 4.0)


@pytest.mark.parametrize(
    "kwargs", [dict(tau=0.0), dict(phi_final=0.127), dict(c_initial=0.0), dict(inhibition=1.5)]
)
def test_model_invariants(kwargs):
    base = dict(phi_initial=0.127, phi_final=-0.038, tau=900.0)
    with pytest.raises(ValueError):
        KineticsModel(**{**base, **kwargs})


def test_concentration_examples():
    assert concentration_from_phase(MODEL, MODEL.phi_initial) == pytest.approx(0.8)
    assert concentration_from_phase(MODEL, MODEL.phi_final) == pytest.approx(0.0, abs=1e-15)
    assert concentration_from_phase(MODEL, 0.5 * (MODEL.phi_initial + MODEL.phi_final)) == pytest.approx(0.4)
    # not clamped
    assert concentration_from_phase(MODEL, MODEL.phi_initial + 0.01) > 0.8


def test_concentration_sd_is_linear():
    assert concentration_sd(MODEL, 0.0165) == pytest.approx(0.8 * 0.0165 / 0.165)


@given(st.floats(0, 2e4), st.floats(0, 0.99))
def test_round_trip_is_pure_exponential(t, inhibition):
    m = KineticsModel(0.127, -0.038, 900.0, t0=0.0, c_initial=0.8, inhibition=inhibition)
    c = concentration_from_phase(m, phase_at(m, t))
    assert c == pytest.approx(0.8 * math.exp(-t * (1 - inhibition) / 900.0), abs=1e-12)
    assert c == pytest.approx(concentration_at(m, t), abs=1e-12)


def test_phase_strictly_monotone():
    t = np.linspace(0, 5000, 400)
    for inh in (0.0, 0.25, 0.9):
        phi = phase_at(KineticsModel(0.127, -0.038, 900.0, inhibition=inh), t)
        assert np.all(np.diff(phi) < 0)
    rising = phase_at(KineticsModel(-0.2, 0.4, 50.0), t[:50])
    assert np.all(np.diff(rising) > 0)


def test_inhibition_ordering():
    t = 1200.0
    phis = [phase_at(KineticsModel(0.127, -0.038, 900.0, inhibition=i), t) for i in (0.0, 0.05, 0.25, 0.6)]
    assert all(abs(b - 0.127) < abs(a - 0.127) for a, b in zip(phis, phis[1:]))


@pytest.mark.parametrize(
    "label, value", [("none", 0.0), ("red_1h", 0.05), ("blue_10min", 0.10), ("blue_30min", 0.18), ("blue_1h", 0.25)]
)
def test_inhibition_scenarios(label, value):
    assert inhibition_scenario(label) == value


def test_inhibition_unknown_label_and_override():
    with pytest.raises(ValueError):
        inhibition_scenario("green_2h")
    assert inhibition_scenario("blue_10min", {"blue_10min": 0.07}) == 0.07
