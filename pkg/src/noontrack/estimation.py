"""Grid-based Bayesian joint estimation of phase and visibility."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .optics import setting_probabilities
from .photon_sim import CountBatch

PHASE_PERIOD = math.pi  # the likelihood depends on 2*phi
PROB_FLOOR = 1e-12
UNIFORM_PHI_SD = PHASE_PERIOD / math.sqrt(12.0)


def wrap_phase(x, center=0.0):
    """Map onto [center - pi/2, center + pi/2)."""
    return (np.asarray(x) - center + PHASE_PERIOD / 2) % PHASE_PERIOD - PHASE_PERIOD / 2 + center


@dataclass(frozen=True)
class EstimatorConfig:
    n_phi: int = 512
    n_v: int = 101
    min_cells: float = 3.0
    max_refinements: int = 8
    sequential_prior: bool = False

    def __post_init__(self):
        if self.n_phi < 8 or self.n_v < 2:
            raise ValueError("grid needs at least 8 phase and 2 visibility points")


@dataclass(frozen=True, eq=False)
class PosteriorGrid:
    """Joint posterior over (phi, V) on a uniform rectangular grid.

    ``batches`` records every batch folded in, so the posterior can be
    re-evaluated on a finer grid.
    """

    phi_axis: np.ndarray
    v_axis: np.ndarray
    weights: np.ndarray
    center: float = 0.0
    batches: tuple = ()

    @classmethod
    def uniform(cls, center: float = 0.0, n_phi: int = 512, n_v: int = 101) -> "PosteriorGrid":
        step = PHASE_PERIOD / n_phi
        phi = center - PHASE_PERIOD / 2 + step * np.arange(n_phi)
        v = np.linspace(0.0, 1.0, n_v)
        w = np.full((n_phi, n_v), 1.0 / (n_phi * n_v))
        return cls(phi, v, w, float(center))

    @property
    def phi_step(self) -> float:
        return float(self.phi_axis[1] - self.phi_axis[0])

    @property
    def v_step(self) -> float:
        return float(self.v_axis[1] - self.v_axis[0])

    @property
    def n_events(self) -> int:
        return sum(b.total for b in self.batches)

    def phi_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def v_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=0)


@dataclass(frozen=True)
class Estimate:
    t: float
    phi_hat: float
    phi_sd: float
    v_hat: float
    v_sd: float
    n_events: int
    theta0: Optional[float] = None
    window_center: float = 0.0
    flags: tuple = field(default=())

    @property
    def bimodal(self) -> bool:
        return "bimodal" in self.flags


def likelihood(batch: CountBatch, phi, v):
    """Multinomial log-likelihood ``sum_k n_k log p_k`` (constant term dropped).

    ``phi`` and ``v`` broadcast against each other.
    """
    n = np.asarray(batch.counts, dtype=float)
    if batch.total == 0:
        warnings.warn("empty batch: likelihood is flat", RuntimeWarning, stacklevel=2)
        return np.zeros(np.broadcast(np.asarray(phi), np.asarray(v)).shape)
    p = setting_probabilities(batch.setting, phi, v)
    return np.log(np.maximum(p, PROB_FLOOR)) @ n


def _grid_loglik(batch: CountBatch, phi_axis, v_axis) -> np.ndarray:
    return likelihood(batch, phi_axis[:, None], v_axis[None, :])


def _normalize_log(logw: np.ndarray) -> np.ndarray:
    logw = logw - np.max(logw)
    w = np.exp(logw)
    return w / w.sum()


def update_posterior(grid: PosteriorGrid, batch: CountBatch) -> PosteriorGrid:
    """Multiply in one batch's likelihood and renormalize in log space."""
    if batch.total == 0:
        return grid
    with np.errstate(divide="ignore"):
        logw = np.log(grid.weights)
    logw = logw + _grid_loglik(batch, grid.phi_axis, grid.v_axis)
    return replace(grid, weights=_normalize_log(logw), batches=grid.batches + (batch,))


def _moments(grid: PosteriorGrid):
    """Circular phase mean/sd (period pi) and visibility mean/sd."""
    m = grid.phi_marginal()
    mid = 0.5 * (grid.phi_axis[0] + grid.phi_axis[-1])
    z = np.sum(m * np.exp(2j * grid.phi_axis))
    if abs(z) < 1e-12:
        phi_hat = grid.center
    else:
        phi_hat = float(wrap_phase(np.angle(z) / 2, mid))
    dev = wrap_phase(grid.phi_axis - phi_hat)
    phi_sd = math.sqrt(max(float(np.sum(m * dev**2)), 0.0))
    mv = grid.v_marginal()
    v_hat = float(np.sum(mv * grid.v_axis))
    v_sd = math.sqrt(max(float(np.sum(mv * (grid.v_axis - v_hat) ** 2)), 0.0))
    return phi_hat, phi_sd, v_hat, v_sd


def _phase_flags(grid: PosteriorGrid) -> tuple:
    m = grid.phi_marginal()
    if m.max() - m.min() <= 1e-9 * m.max():
        return ("uninformative",)
    full_period = abs(grid.phi_axis.size * grid.phi_step - PHASE_PERIOD) < 1e-9
    if not full_period:
        return ()
    left, right = np.roll(m, 1), np.roll(m, -1)
    peaks = np.flatnonzero((m > left) & (m >= right))
    if peaks.size >= 2:
        heights = np.sort(m[peaks])[::-1]
        if heights[1] >= 0.5 * heights[0]:
            return ("bimodal",)
    return ()


def refine(grid: PosteriorGrid, min_cells: float = 3.0, max_levels: int = 8) -> PosteriorGrid:
    """Halve the grid spacing, zoomed on the posterior bulk, until sds span ``min_cells`` cells.

    The zoomed window is +-8 sd (at least +-8 cells) wide, so the discarded
    tails carry negligible weight.
    """
    if not grid.batches:
        return grid
    g = grid
    for _ in range(max_levels):
        phi_hat, phi_sd, v_hat, v_sd = _moments(g)
        dphi, dv = g.phi_step, g.v_step
        need_phi = phi_sd < min_cells * dphi
        need_v = v_sd < min_cells * dv
        if not (need_phi or need_v):
            break
        phi_axis, v_axis = g.phi_axis, g.v_axis
        if need_phi:
            step = dphi / 2
            half = 8 * max(phi_sd, dphi)
            if 2 * half >= PHASE_PERIOD:
                n = int(round(PHASE_PERIOD / step))
                phi_axis = g.center - PHASE_PERIOD / 2 + (PHASE_PERIOD / n) * np.arange(n)
            else:
                n = int(math.ceil(2 * half / step)) + 1
                phi_axis = phi_hat + step * (np.arange(n) - (n - 1) / 2)
        if need_v:
            step = dv / 2
            half = 8 * max(v_sd, dv)
            lo, hi = max(0.0, v_hat - half), min(1.0, v_hat + half)
            n = max(3, int(math.ceil((hi - lo) / step)) + 1)
            v_axis = np.linspace(lo, hi, n)
        logw = sum(_grid_loglik(b, phi_axis, v_axis) for b in g.batches)
        g = replace(g, phi_axis=phi_axis, v_axis=v_axis, weights=_normalize_log(logw))
    return g


def point_estimate(grid: PosteriorGrid, t: Optional[float] = None, theta0: Optional[float] = None) -> Estimate:
    """Posterior means and sds; the phase is reported inside the window.

    The phase sd never drops below the grid quantization ``step / sqrt(12)``.
    """
    phi_hat, phi_sd, v_hat, v_sd = _moments(grid)
    phi_sd = max(phi_sd, grid.phi_step / math.sqrt(12.0))
    if t is None:
        t = grid.batches[-1].t if grid.batches else 0.0
    return Estimate(
        t=float(t),
        phi_hat=float(wrap_phase(phi_hat, grid.center)),
        phi_sd=phi_sd,
        v_hat=min(max(v_hat, 0.0), 1.0),
        v_sd=v_sd,
        n_events=grid.n_events,
        theta0=theta0,
        window_center=grid.center,
        flags=_phase_flags(grid),
    )


def estimate_batch(
    batch: CountBatch,
    center: float = 0.0,
    config: EstimatorConfig = EstimatorConfig(),
    prior: Optional[PosteriorGrid] = None,
) -> tuple:
    """Estimate (phi, V) from one batch; returns ``(estimate, coarse_posterior)``.

    Bimodality is judged on the full-period coarse grid; moments come from
    the refined grid.
    """
    grid = prior if prior is not None else PosteriorGrid.uniform(center, config.n_phi, config.n_v)
    grid = update_posterior(grid, batch)
    flags = _phase_flags(grid)
    fine = refine(grid, config.min_cells, config.max_refinements)
    est = point_estimate(fine, t=batch.t, theta0=batch.setting.theta0)
    return replace(est, flags=flags), grid
