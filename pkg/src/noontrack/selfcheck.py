"""Numerical self-checks run by ``noontrack selfcheck``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import fisher_matrix
from .estimation import estimate_batch
from .optics import MeasurementSetting, amplitude_oracle_coincidence, setting_probabilities
from .photon_sim import CountBatch, simulate_counts


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.6g} ({self.tolerance})"


def fisher_matrix_numeric(theta0: float, phi: float, v: float, h: float = 1e-6) -> np.ndarray:
    """Fisher matrix from central finite differences of the four probabilities."""
    s = MeasurementSetting(theta0)
    p = setting_probabilities(s, phi, v)
    d_phi = (setting_probabilities(s, phi + h, v) - setting_probabilities(s, phi - h, v)) / (2 * h)
    d_v = (setting_probabilities(s, phi, v + h) - setting_probabilities(s, phi, v - h)) / (2 * h)
    g = np.stack([d_phi, d_v])
    return (g / p) @ g.T


def oracle_sweep(n: int = 1000, seed: int = 0) -> float:
    """Max |operator-algebra coincidence - closed form| over random (theta, phi)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for theta, phi in rng.uniform(-math.pi, math.pi, size=(n, 2)):
        closed = (1.0 + math.cos(8 * theta + 2 * phi)) / 2
        worst = max(worst, abs(amplitude_oracle_coincidence(theta, phi) - closed))
    return worst


def normalization_sweep(n: int = 10_000, seed: int = 1) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for theta0, phi, v in zip(rng.uniform(0, math.pi / 4, n), rng.uniform(-math.pi, math.pi, n), rng.uniform(0, 1, n)):
        worst = max(worst, abs(float(np.sum(setting_probabilities(MeasurementSetting(theta0), phi, v))) - 1.0))
    return worst


def fisher_fd_sweep(n: int = 100, seed: int = 2) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for theta0, phi, v in zip(rng.uniform(0, math.pi / 4, n), rng.uniform(-math.pi, math.pi, n), rng.uniform(0.05, 0.95, n)):
        diff = fisher_matrix(theta0, phi, v) - fisher_matrix_numeric(theta0, phi, v)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def coverage(n_runs: int = 200, phi: float = 0.3, v: float = 0.9, n_events: int = 20_000,
             theta0: float = math.pi / 32, seed: int = 3) -> float:
    """Fraction of runs whose +-1 sd interval contains the true phase."""
    rng = np.random.default_rng(seed)
    setting = MeasurementSetting(theta0)
    hits = 0
    for _ in range(n_runs):
        batch = CountBatch(0.0, setting, simulate_counts(setting, phi, v, n_events, rng), 1.0)
        est, _ = estimate_batch(batch, center=phi)
        hits += abs(est.phi_hat - phi) <= est.phi_sd
    return hits / n_runs


def run_all(cov_runs: int = 200) -> list:
    results = []
    dev = oracle_sweep()
    results.append(CheckResult("oracle sweep max deviation", dev < 1e-12, dev, "< 1e-12"))
    dev = normalization_sweep()
    results.append(CheckResult("setting normalization max deviation", dev < 1e-12, dev, "< 1e-12"))
    dev = fisher_fd_sweep()
    results.append(CheckResult("Fisher analytic vs finite difference", dev < 1e-6, dev, "< 1e-6"))
    cov = coverage(cov_runs)
    results.append(CheckResult(f"posterior 1-sd coverage over {cov_runs} runs", abs(cov - 0.68) <= 0.05, cov,
                               "0.68 +- 0.05"))
    return results
