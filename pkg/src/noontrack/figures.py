"""Plot-ready tables for the calibration, tracking, error and visibility figures."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .bounds import optimal_phase_sd
from .config import ScenarioConfig
from .kinetics import KineticsModel, concentration_at
from .optics import amplitude_oracle_coincidence, single_photon_transmission
from .photon_sim import DriftModel, Schedule, SimulatedSource
from .tracker import DEFAULT_THETA0, TrackerConfig, TrackRecord, track

FIGURES = ("fringe-calibration", "tracking", "errors-vs-bounds", "adaptive-test", "visibility")


def run_scenario(cfg: ScenarioConfig, seed: Optional[int] = None, adaptive: Optional[bool] = None):
    """Simulate and track one scenario; returns ``(record, source)``."""
    seed = cfg.seed if seed is None else seed
    tracker = cfg.tracker
    if adaptive is not None:
        tracker = TrackerConfig(adaptive, tracker.default_theta0, tracker.initial_center, tracker.estimator)
    drift = DriftModel(cfg.drift.v_initial, cfg.drift.v_slope, cfg.drift.v_noise_sd, seed + 1)
    source = SimulatedSource(cfg.kinetics, drift, cfg.schedule, cfg.probe.flux, seed)
    return track(source, cfg.kinetics, tracker), source


def fringe_calibration(visibility: float = 0.95, flux: float = 2000.0, dwell: float = 1.0,
                       n_angles: int = 91, seed: int = 0) -> list:
    """Coincidences vs HWP angle at phi = 0, with the single-photon reference.

    The N00N column oscillates with period pi/4 in theta, the reference
    with pi/2.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for theta in np.linspace(0.0, math.pi / 2, n_angles):
        ideal = amplitude_oracle_coincidence(theta, 0.0)
        model = flux * dwell * (0.5 * (1.0 - visibility) + visibility * ideal)
        rows.append({
            "theta_rad": float(theta),
            "theta_deg": math.degrees(theta),
            "noon_counts": int(rng.poisson(model)),
            "noon_model": model,
            "classical_model": flux * dwell * single_photon_transmission(theta, 0.0),
        })
    return rows


def tracking_rows(record: TrackRecord, source: SimulatedSource, kinetics: KineticsModel) -> list:
    rows = []
    for i, e in enumerate(record.estimates):
        rows.append({
            "t": e.t,
            "phi_true": float(source.phi[i]),
            "phi_hat": e.phi_hat,
            "phi_sd": e.phi_sd,
            "c_true": float(concentration_at(kinetics, e.t)),
            "c_s": record.concentrations[i],
            "c_s_sd": record.concentration_sds[i],
            "phi_hat_deg": math.degrees(e.phi_hat),
        })
    return rows


def errors_vs_bounds_rows(record: TrackRecord, photon_number: int = 2) -> list:
    """Per-point phase sd against the N00N and equal-intensity classical bounds."""
    rows = []
    for e in record.estimates:
        m = max(e.n_events, 1)
        rows.append({
            "t": e.t,
            "phi_sd": e.phi_sd,
            "n_events": e.n_events,
            "bound_noon": 1.0 / (photon_number * math.sqrt(m)),
            "bound_classical": 1.0 / math.sqrt(photon_number * m),
            "crb_fisher": optimal_phase_sd(e.v_hat, m) if e.v_hat > 0 else math.inf,
        })
    return rows


def visibility_rows(record: TrackRecord, source: SimulatedSource) -> list:
    return [
        {"t": e.t, "v_true": float(source.v[i]), "v_hat": e.v_hat, "v_sd": e.v_sd}
        for i, e in enumerate(record.estimates)
    ]


def staircase_phases(n_points: int = 15, phi_start: float = 0.6, phi_end: float = -0.45,
                     steps_per_tau: float = 4.0) -> np.ndarray:
    """Known phases decaying step by step, one per batch."""
    k = np.arange(n_points) + 0.5
    return phi_end + (phi_start - phi_end) * np.exp(-k / steps_per_tau)


def staircase_comparison(visibility: float = 0.92, n_points: int = 15, flux: float = 2000.0,
                         interval: float = 37.0, seed: int = 0, fixed_theta0: float = DEFAULT_THETA0,
                         phases: Optional[np.ndarray] = None) -> dict:
    """Track a known-phase staircase twice: adaptive, and with theta0 held fixed.

    Both runs see identical count noise (same seed).
    """
    phases = staircase_phases(n_points) if phases is None else np.asarray(phases, dtype=float)
    schedule = Schedule(interval, interval * len(phases), 0.0)
    # kinetics only feeds the concentration column here
    kin = KineticsModel(float(phases[0]), float(phases[-1]) - 1.0, 1.0)
    out = {}
    for label, adaptive in (("adaptive", True), ("fixed", False)):
        src = SimulatedSource(kin, DriftModel(visibility, 0.0, 0.0, seed), schedule, flux, seed,
                              phases=phases)
        cfg = TrackerConfig(adaptive=adaptive, default_theta0=fixed_theta0, initial_center=float(phases[0]))
        out[label] = track(src, kin, cfg)
    out["phases"] = phases
    return out


def adaptive_test_rows(result: dict) -> list:
    rows = []
    for i, phi in enumerate(result["phases"]):
        a, f = result["adaptive"].estimates[i], result["fixed"].estimates[i]
        rows.append({
            "index": i + 1,
            "phi_known": float(phi),
            "phi_hat_adaptive": a.phi_hat,
            "phi_sd_adaptive": a.phi_sd,
            "n_adaptive": a.n_events,
            "phi_hat_fixed": f.phi_hat,
            "phi_sd_fixed": f.phi_sd,
            "n_fixed": f.n_events,
            "sd_ratio_fixed_over_adaptive": (f.phi_sd * math.sqrt(f.n_events)) / (a.phi_sd * math.sqrt(a.n_events)),
            "crb_optimal_adaptive": optimal_phase_sd(a.v_hat, a.n_events),
            "mode": result["adaptive"].modes[i],
            "v_hat_adaptive": a.v_hat,
        })
    return rows
