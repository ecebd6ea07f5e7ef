"""Adaptive N00N-state phase tracking: simulation, Bayesian estimation and bounds."""

from .bounds import BoundsReport, bounds_report, fisher_matrix, optimal_phase_sd
from .estimation import Estimate, EstimatorConfig, PosteriorGrid, likelihood, point_estimate, update_posterior
from .kinetics import KineticsModel, concentration_from_phase, inhibition_scenario, phase_at
from .optics import (MeasurementSetting, ProbeModel, TwoPhotonState, amplitude_oracle_coincidence,
                     fringe_probability, noon_state_after_sample, setting_probabilities)
from .photon_sim import CountBatch, DriftModel, Schedule, simulate_batch, simulate_run
from .tracker import TrackRecord, choose_setting, predict_phase, track

__all__ = [
    "BoundsReport",
    "bounds_report",
    "fisher_matrix",
    "optimal_phase_sd",
    "Estimate",
    "EstimatorConfig",
    "PosteriorGrid",
    "likelihood",
    "point_estimate",
    "update_posterior",
    "KineticsModel",
    "concentration_from_phase",
    "inhibition_scenario",
    "phase_at",
    "MeasurementSetting",
    "ProbeModel",
    "TwoPhotonState",
    "amplitude_oracle_coincidence",
    "fringe_probability",
    "noon_state_after_sample",
    "setting_probabilities",
    "CountBatch",
    "DriftModel",
    "Schedule",
    "simulate_batch",
    "simulate_run",
    "TrackRecord",
    "choose_setting",
    "predict_phase",
    "track",
]

__version__ = "0.1.0"
