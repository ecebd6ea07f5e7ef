"""Two-photon N00N probe: state coefficients and post-selected fringe laws.

The probe is the pair ``a_H^dag a_V^dag |0>`` recombined on a PBS, which in
the circular basis is a N = 2 N00N state.  A chiral sample rotates both
photons by ``phi / 2``; the analyzer is a half-wave plate at angle ``theta``
followed by a PBS, and only coincidences (one photon per output port) are
kept.

Two independent routes to the fringe are provided:

* the closed form ``p(theta; phi, V) = (1 + V cos(8 theta + 2 phi)) / 4``
  used by the estimator, and
* :func:`amplitude_oracle_coincidence`, which expands the creation
  operators explicitly and reads off the ``|1_H 1_V>`` amplitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

QUARTER_PERIOD = math.pi / 4
SETTING_OFFSETS = np.array([0.0, math.pi / 16, math.pi / 8, 3 * math.pi / 16])


@dataclass(frozen=True)
class ProbeModel:
    """Statistical identity of the probe.

    ``efficiency`` lumps transmission and detection; post-selected
    statistics do not depend on it, only the coincidence flux and the
    loss analysis do.
    """

    photon_number: int = 2
    visibility: float = 0.92
    efficiency: float = 0.05
    flux: float = 2000.0

    def __post_init__(self):
        if self.photon_number < 1:
            raise ValueError(f"photon_number must be >= 1, got {self.photon_number}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if not self.flux > 0:
            raise ValueError(f"flux must be positive, got {self.flux}")


@dataclass(frozen=True)
class MeasurementSetting:
    """Base HWP angle and the four analyzer angles of one batch."""

    theta0: float
    angles: tuple = field(init=False)

    def __post_init__(self):
        if not math.isfinite(self.theta0):
            raise ValueError("theta0 must be finite")
        reduced = math.fmod(self.theta0, QUARTER_PERIOD)
        if reduced < 0:
            reduced += QUARTER_PERIOD
        if reduced >= QUARTER_PERIOD:  # fmod rounding at the upper edge
            reduced = 0.0
        object.__setattr__(self, "theta0", reduced)
        object.__setattr__(self, "angles", tuple(float(reduced + d) for d in SETTING_OFFSETS))


@dataclass(frozen=True)
class TwoPhotonState:
    """Real amplitudes on |1_H 1_V>, |2_H 0_V>, |0_H 2_V>."""

    amplitude_HV: float
    amplitude_HH: float
    amplitude_VV: float

    def norm(self) -> float:
        return self.amplitude_HV**2 + self.amplitude_HH**2 + self.amplitude_VV**2


def noon_state_after_sample(phi: float) -> TwoPhotonState:
    """State after the sample has rotated each photon by ``phi / 2``.

    Equals ``cos(phi)|1_H 1_V> - sin(phi) (|2_H> - |2_V>) / sqrt(2)``.
    """
    if not math.isfinite(phi):
        raise ValueError("phi must be finite")
    s = math.sin(phi) / math.sqrt(2.0)
    return TwoPhotonState(math.cos(phi), -s, s)


def _check_visibility(v):
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0.0) or np.any(v_arr > 1.0) or np.any(~np.isfinite(v_arr)):
        raise ValueError("visibility must lie in [0, 1]")


def fringe_probability(theta, phi, v):
    """Multinomial probability of the coincidence at analyzer angle ``theta``.

    Broadcasts over array arguments. The 1/4 normalization assumes equal
    acquisition time on each of the four analyzer angles.
    """
    _check_visibility(v)
    return 0.25 * (1.0 + np.asarray(v) * np.cos(8.0 * np.asarray(theta) + 2.0 * np.asarray(phi)))


def setting_probabilities(setting: MeasurementSetting, phi, v) -> np.ndarray:
    """The four ``p(theta_k; phi, V)``; the last axis indexes k.

    Written in the rotated-cosine form so that the sum is 1 up to a single
    rounding of the shared terms.
    """
    _check_visibility(v)
    a = 8.0 * setting.theta0 + 2.0 * np.asarray(phi, dtype=float)
    v = np.asarray(v, dtype=float)
    vc = v * np.cos(a)
    vs = v * np.sin(a)
    # cos(a + k pi/2) = cos a, -sin a, -cos a, sin a
    return 0.25 * np.stack([1.0 + vc, 1.0 - vs, 1.0 - vc, 1.0 + vs], axis=-1)


# ---------------------------------------------------------------------------
# Operator-level oracle
# ---------------------------------------------------------------------------
# A state is a polynomial in the creation operators a_H^dag, a_V^dag acting on
# vacuum, stored as {(n_H, n_V): coefficient}. A monomial H^a V^b |0> is the
# Fock vector sqrt(a! b!) |a, b>.


def _fock_to_poly(fock: dict) -> dict:
    return {k: c / math.sqrt(math.factorial(k[0]) * math.factorial(k[1])) for k, c in fock.items()}


def _poly_to_fock(poly: dict) -> dict:
    return {k: c * math.sqrt(math.factorial(k[0]) * math.factorial(k[1])) for k, c in poly.items()}


def _transform_modes(poly: dict, matrix) -> dict:
    """Substitute a_H^dag -> m00 H + m01 V and a_V^dag -> m10 H + m11 V."""
    (m00, m01), (m10, m11) = matrix
    out: dict = {}
    for (nh, nv), coeff in poly.items():
        factors = [(m00, m01)] * nh + [(m10, m11)] * nv
        # expand the product of linear forms term by term
        for choice in product((0, 1), repeat=len(factors)):
            c = coeff
            for f, pick in zip(factors, choice):
                c *= f[pick]
            key = (choice.count(0), choice.count(1))
            out[key] = out.get(key, 0.0) + c
    return out


def half_wave_plate(theta: float) -> tuple:
    """HWP mode map at angle ``theta``.

    Angles are measured in the opposite sense to the sample's rotation,
    which is the handedness in which the fringe argument reads
    ``8 theta + 2 phi``.
    """
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return ((c, -s), (-s, -c))


def sample_rotation(phi: float) -> tuple:
    """Each photon rotated by ``phi / 2``: H -> cH + sV, V -> cV - sH."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return ((c, s), (-s, c))


def amplitude_oracle_coincidence(theta: float, phi: float) -> float:
    """Coincidence probability at ideal visibility from explicit operator algebra.

    The state of :func:`noon_state_after_sample` is pushed through the HWP and
    the ``|1_H 1_V>`` amplitude is squared. Equals ``(1 + cos(8 theta + 2 phi)) / 2``.
    """
    st = noon_state_after_sample(phi)
    fock = {(1, 1): st.amplitude_HV, (2, 0): st.amplitude_HH, (0, 2): st.amplitude_VV}
    out = _poly_to_fock(_transform_modes(_fock_to_poly(fock), half_wave_plate(theta)))
    return out.get((1, 1), 0.0) ** 2


def oracle_state_from_rotation(phi: float) -> TwoPhotonState:
    """Rebuild the post-sample state by rotating the H and V photons one by one."""
    out = _poly_to_fock(_transform_modes({(1, 1): 1.0}, sample_rotation(phi)))
    return TwoPhotonState(out.get((1, 1), 0.0), out.get((2, 0), 0.0), out.get((0, 2), 0.0))


def single_photon_transmission(theta: float, phi: float) -> float:
    """Classical reference: one H photon, same sample and analyzer, H-port probability.

    Period in ``theta`` is pi/2, twice that of the N00N coincidence fringe.
    """
    poly = _transform_modes({(1, 0): 1.0}, sample_rotation(phi))
    out = _poly_to_fock(_transform_modes(poly, half_wave_plate(theta)))
    return out.get((1, 0), 0.0) ** 2
