"""Closed-loop phase tracking: predict, set the analyzer, measure, estimate, convert."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np
from scipy.optimize import curve_fit, least_squares

from .estimation import Estimate, EstimatorConfig, estimate_batch
from .kinetics import KineticsModel, concentration_from_phase, concentration_sd
from .optics import MeasurementSetting, QUARTER_PERIOD
from .photon_sim import CountBatch

DEFAULT_THETA0 = math.pi / 32
MODE_NONE = "none"
MODE_INTERP = "interpolation"
MODE_FIT = "exponential-fit"
MIN_FIT_POINTS = 4

TRACK_COLUMNS = [
    "t", "phi_p", "mode", "theta0", "phi_hat", "phi_sd", "v_hat", "v_sd",
    "c_s", "c_s_sd", "n_events", "window_center", "flags", "phi_hat_deg", "phi_sd_deg",
]


class BatchSource(Protocol):
    def next_time(self) -> Optional[float]: ...

    def measure(self, setting: MeasurementSetting) -> Optional[CountBatch]: ...


@dataclass(frozen=True)
class FitResult:
    phi_inf: float
    amplitude: float
    tau_hat: float
    residual_rms: float
    converged: bool
    t0: float = 0.0

    def __call__(self, t):
        return self.phi_inf + self.amplitude * np.exp(-(np.asarray(t, dtype=float) - self.t0) / self.tau_hat)


def _initial_guess(t, y, w):
    """Aitken-style asymptote from three equally spaced points, then log-slope tau."""
    n = len(y)
    m = (n - 1) // 2
    y0, y1, y2 = y[0], y[m], y[2 * m]
    den = y0 + y2 - 2 * y1
    direction = np.sign(y[-1] - y[0]) or 1.0
    phi_inf = None
    if abs(den) > 1e-12 * max(1.0, abs(y0)):
        cand = (y0 * y2 - y1 * y1) / den
        # the asymptote must lie beyond the latest point, in the direction of travel
        if (cand - y[-1]) * direction > 0:
            phi_inf = cand
    if phi_inf is None:
        phi_inf = y[-1] + (y[-1] - y[0])
    r = (y[-2] - phi_inf) / (y[-1] - phi_inf) if y[-1] != phi_inf else 0.0
    span = max(t[-1] - t[0], 1e-9)
    tau = (t[-1] - t[-2]) / math.log(r) if r > 1.0 else span
    # amplitude and asymptote by weighted linear least squares at fixed tau
    e = np.exp(-(t - t[0]) / tau)
    a = np.stack([np.ones_like(e), e], axis=1) * w[:, None]
    sol, *_ = np.linalg.lstsq(a, y * w, rcond=None)
    return float(sol[0]), float(sol[1]), float(tau)


def fit_exponential(times: Sequence[float], phases: Sequence[float], sds: Optional[Sequence[float]] = None,
                    t0: Optional[float] = None, max_iter: int = 100, rtol: float = 1e-8) -> FitResult:
    """Weighted Levenberg-Marquardt fit of ``phi_inf + A exp(-(t - t0)/tau)``.

    tau is fitted on a log scale, so a converged fit always has ``tau > 0``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(phases, dtype=float)
    w = np.ones_like(y) if sds is None else 1.0 / np.maximum(np.asarray(sds, dtype=float), 1e-15)
    t0 = float(t[0]) if t0 is None else float(t0)
    if t.size < 3:
        raise ValueError("need at least three points for a three-parameter fit")
    phi_inf0, amp0, tau0 = _initial_guess(t, y, w)
    amp0 = amp0 * math.exp((t[0] - t0) / tau0)  # re-reference amplitude to t0

    def resid(p):
        return (p[0] + p[1] * np.exp(-(t - t0) * np.exp(-p[2])) - y) * w

    def jac(p):
        tau = math.exp(p[2])
        e = np.exp(-(t - t0) / tau)
        return np.stack([w, e * w, p[1] * e * (t - t0) / tau * w], axis=1)

    try:
        sol = least_squares(resid, [phi_inf0, amp0, math.log(tau0)], jac=jac, method="lm",
                            xtol=rtol, ftol=rtol, max_nfev=max_iter)
        p = sol.x
        ok = bool(sol.success) and bool(np.all(np.isfinite(p)))
    except (ValueError, FloatingPointError, OverflowError):
        p, ok = np.array([phi_inf0, amp0, math.log(tau0)]), False
    tau_hat = float(math.exp(min(p[2], 700.0)))
    model = p[0] + p[1] * np.exp(-(t - t0) / tau_hat)
    rms = float(np.sqrt(np.mean((model - y) ** 2)))
    ok = ok and math.isfinite(tau_hat) and math.isfinite(rms)
    return FitResult(float(p[0]), float(p[1]), tau_hat, rms, ok, t0)


def _interpolate(history: Sequence[Estimate], t_next: float) -> float:
    if len(history) == 1:
        return history[-1].phi_hat
    a, b = history[-2], history[-1]
    return b.phi_hat + (b.phi_hat - a.phi_hat) * (t_next - b.t) / (b.t - a.t)


def predict_phase(history: Sequence[Estimate], t_next: float, return_fit: bool = False):
    """Predicted phase at ``t_next`` from earlier estimates only.

    Returns ``(phi_p, mode)``, or ``(phi_p, mode, fit)`` with ``return_fit``.
    """
    times = [e.t for e in history]
    if any(b <= a for a, b in zip(times, times[1:])) or (times and t_next <= times[-1]):
        raise ValueError("history timestamps must be strictly increasing and precede t_next")
    fit = None
    if not history:
        out = (None, MODE_NONE)
    elif len(history) < MIN_FIT_POINTS:
        out = (_interpolate(history, t_next), MODE_INTERP)
    else:
        fit = fit_exponential(times, [e.phi_hat for e in history], [e.phi_sd for e in history])
        if fit.converged:
            out = (float(fit(t_next)), MODE_FIT)
        else:
            out = (_interpolate(history, t_next), MODE_INTERP)
    return (*out, fit) if return_fit else out


def choose_setting(phi_p: Optional[float], default_theta0: float = DEFAULT_THETA0) -> MeasurementSetting:
    """Analyzer setting with ``8 theta0 + 2 phi_p = pi/4``, reduced to [0, pi/4)."""
    if phi_p is None:
        return MeasurementSetting(default_theta0)
    return MeasurementSetting(((math.pi / 4 - 2.0 * phi_p) / 8.0) % QUARTER_PERIOD)


@dataclass(frozen=True)
class TrackerConfig:
    adaptive: bool = True
    default_theta0: float = DEFAULT_THETA0
    initial_center: float = 0.0
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)


@dataclass
class TrackRecord:
    estimates: list = field(default_factory=list)
    predictions: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    settings: list = field(default_factory=list)
    concentrations: list = field(default_factory=list)
    concentration_sds: list = field(default_factory=list)
    fits: list = field(default_factory=list)
    batches: list = field(default_factory=list)

    def __len__(self):
        return len(self.estimates)

    def rows(self) -> list:
        out = []
        for i, e in enumerate(self.estimates):
            out.append({
                "t": e.t,
                "phi_p": self.predictions[i],
                "mode": self.modes[i],
                "theta0": self.settings[i],
                "phi_hat": e.phi_hat,
                "phi_sd": e.phi_sd,
                "v_hat": e.v_hat,
                "v_sd": e.v_sd,
                "c_s": self.concentrations[i],
                "c_s_sd": self.concentration_sds[i],
                "n_events": e.n_events,
                "window_center": e.window_center,
                "flags": ";".join(e.flags),
                "phi_hat_deg": math.degrees(e.phi_hat),
                "phi_sd_deg": math.degrees(e.phi_sd),
            })
        return out

    def to_json(self, **extra) -> str:
        doc = {
            **extra,
            "points": self.rows(),
            "fits": [None if f is None else _finite_or_none(asdict(f)) for f in self.fits],
        }
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False, default=_json_default)


def _finite_or_none(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not serializable: {type(x)}")


def track(source: BatchSource, kinetics: KineticsModel, config: TrackerConfig = TrackerConfig()) -> TrackRecord:
    """Run the predict -> choose -> measure -> estimate -> convert loop until the source runs dry."""
    rec = TrackRecord()
    prev_grid = None
    while (t_next := source.next_time()) is not None:
        phi_p, mode, fit = predict_phase(rec.estimates, t_next, return_fit=True)
        if config.adaptive:
            setting = choose_setting(phi_p, config.default_theta0)
        else:
            setting = MeasurementSetting(config.default_theta0)
        batch = source.measure(setting)
        if batch is None:
            break
        center = config.initial_center if phi_p is None else phi_p
        prior = prev_grid if config.estimator.sequential_prior else None
        est, grid = estimate_batch(batch, center, config.estimator, prior=prior)
        if est.bimodal and prior is None:
            retry, grid2 = estimate_batch(batch, est.phi_hat, config.estimator)
            est, grid = (retry, grid2) if not retry.bimodal else (est, grid)
        prev_grid = grid
        rec.estimates.append(est)
        rec.predictions.append(phi_p)
        rec.modes.append(mode)
        rec.settings.append(setting.theta0)
        rec.fits.append(fit)
        rec.batches.append(batch)
        rec.concentrations.append(concentration_from_phase(kinetics, est.phi_hat))
        rec.concentration_sds.append(float(concentration_sd(kinetics, est.phi_sd)))
    return rec


@dataclass(frozen=True)
class DecayFit:
    c0: float
    rate: float
    rate_sd: float
    chi2_reduced: float


def fit_concentration_decay(record: TrackRecord, t0: float = 0.0) -> DecayFit:
    """Weighted single-exponential fit ``C(t) = C0 exp(-k (t - t0))`` of a tracked concentration series."""
    t = np.array([e.t for e in record.estimates])
    c = np.asarray(record.concentrations, dtype=float)
    sd = np.asarray(record.concentration_sds, dtype=float)
    if t.size < 3:
        raise ValueError("need at least three points")
    k0 = 1.0 / max(t[-1] - t0, 1e-9)
    popt, pcov = curve_fit(lambda tt, c0, k: c0 * np.exp(-k * (tt - t0)), t, c, p0=[max(c[0], 1e-6), k0],
                           sigma=sd, absolute_sigma=True, maxfev=2000)
    resid = (c - popt[0] * np.exp(-popt[1] * (t - t0))) / sd
    return DecayFit(float(popt[0]), float(popt[1]), float(math.sqrt(pcov[1, 1])),
                    float(np.sum(resid**2) / max(t.size - 2, 1)))
