"""Coincidence-count generation from a ground-truth (phi(t), V(t)) trajectory."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .kinetics import KineticsModel, phase_at
from .optics import MeasurementSetting, setting_probabilities

# Columns of the batch CSV stream; the last two are optional truth columns.
BATCH_COLUMNS = ["t", "theta0", "n0", "n1", "n2", "n3", "duration"]
TRUTH_COLUMNS = ["phi_true", "v_true"]


@dataclass(frozen=True)
class CountBatch:
    """Coincidences accumulated on the four analyzer angles of one setting."""

    t: float
    setting: MeasurementSetting
    counts: tuple
    duration: float
    phi_true: Optional[float] = None
    v_true: Optional[float] = None

    def __post_init__(self):
        counts = tuple(int(n) for n in self.counts)
        if len(counts) != 4:
            raise ValueError("a batch holds exactly four counts")
        if any(n < 0 for n in counts):
            raise ValueError("counts must be non-negative")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class DriftModel:
    """Slow visibility drift: linear trend plus Gaussian jitter, clamped to [0, 1]."""

    v_initial: float = 0.92
    v_slope: float = 0.0
    v_noise_sd: float = 0.0
    seed: int = 0

    def trajectory(self, times: Sequence[float], t0: float = 0.0) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        v = self.v_initial + self.v_slope * (times - t0)
        if self.v_noise_sd > 0:
            v = v + np.random.default_rng(self.seed).normal(0.0, self.v_noise_sd, size=times.shape)
        return np.clip(v, 0.0, 1.0)


@dataclass(frozen=True)
class Schedule:
    """Back-to-back batches of ``interval`` seconds starting at ``start``."""

    interval: float = 37.0
    horizon: float = 0.0
    start: float = 0.0

    def __post_init__(self):
        if not self.interval > 0:
            raise ValueError("interval must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")

    @property
    def n_batches(self) -> int:
        # tolerate float noise in horizon / interval
        return int(math.floor(self.horizon / self.interval + 1e-9))

    def midpoints(self) -> np.ndarray:
        return self.start + self.interval * (np.arange(self.n_batches) + 0.5)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_counts(setting: MeasurementSetting, phi: float, v: float, n_events: int, seed=None) -> tuple:
    """Split exactly ``n_events`` coincidences multinomially over the four angles."""
    p = setting_probabilities(setting, phi, v)
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    return tuple(int(n) for n in _rng(seed).multinomial(int(n_events), p))


def simulate_batch(
    setting: MeasurementSetting,
    phi_true: float,
    v_true: float,
    flux: float,
    duration: float,
    seed=None,
    t: float = 0.0,
) -> CountBatch:
    """One batch: Poisson total at ``flux * duration``, multinomial split.

    Each analyzer angle gets ``duration / 4``; with equal times the split is
    exactly the four fringe probabilities.
    """
    if not (flux > 0 and duration > 0) or flux * duration < 1:
        raise ValueError(f"need flux > 0, duration > 0 and flux*duration >= 1 (got {flux}, {duration})")
    rng = _rng(seed)
    total = rng.poisson(flux * duration)
    counts = simulate_counts(setting, phi_true, v_true, total, rng)
    return CountBatch(t=t, setting=setting, counts=counts, duration=duration, phi_true=phi_true, v_true=v_true)


class RunAborted(RuntimeError):
    """The setting policy failed mid-run; ``partial`` holds the batches emitted so far."""

    def __init__(self, message: str, partial: list):
        super().__init__(message)
        self.partial = partial


class SimulatedSource:
    """Batch provider for the tracking loop.

    Truth values are fixed per batch at its midpoint; ``phases`` replaces the
    kinetics with a known per-batch sequence. ``measure`` returns ``None``
    once the schedule is exhausted.
    """

    def __init__(
        self,
        kinetics: KineticsModel,
        drift: DriftModel,
        schedule: Schedule,
        flux: float,
        seed=0,
        phases: Optional[Sequence[float]] = None,
    ):
        self.schedule = schedule
        self.flux = flux
        self.times = schedule.midpoints()
        if phases is None:
            self.phi = np.array([phase_at(kinetics, max(t, kinetics.t0)) for t in self.times])
        else:
            self.phi = np.asarray(phases, dtype=float)
            if self.phi.shape != self.times.shape:
                raise ValueError("need one known phase per scheduled batch")
        self.v = drift.trajectory(self.times, t0=schedule.start)
        self._rng = _rng(seed)
        self._i = 0

    def __len__(self):
        return len(self.times)

    def next_time(self) -> Optional[float]:
        return float(self.times[self._i]) if self._i < len(self.times) else None

    def measure(self, setting: MeasurementSetting) -> Optional[CountBatch]:
        if self._i >= len(self.times):
            return None
        i = self._i
        self._i += 1
        return simulate_batch(
            setting,
            float(self.phi[i]),
            float(self.v[i]),
            self.flux,
            self.schedule.interval,
            self._rng,
            t=float(self.times[i]),
        )


def simulate_run(
    kinetics: KineticsModel,
    drift: DriftModel,
    schedule: Schedule,
    policy: Callable[[float, list], float],
    flux: float = 2000.0,
    seed=0,
) -> list:
    """Emit one batch per sampling time; ``policy(t, batches_so_far)`` picks theta0."""
    source = SimulatedSource(kinetics, drift, schedule, flux, seed)
    batches: list = []
    while (t := source.next_time()) is not None:
        try:
            theta0 = policy(t, list(batches))
        except Exception as exc:
            raise RunAborted(f"setting policy failed at t={t}: {exc}", batches) from exc
        batches.append(source.measure(MeasurementSetting(theta0)))
    return batches


def fixed_policy(theta0: float) -> Callable[[float, list], float]:
    return lambda t, history: theta0


def write_batches_csv(batches: Iterable[CountBatch], stream, include_truth: bool = False) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(BATCH_COLUMNS + (TRUTH_COLUMNS if include_truth else []))
    for b in batches:
        row = [repr(b.t), repr(b.setting.theta0), *b.counts, repr(b.duration)]
        if include_truth:
            row += ["" if b.phi_true is None else repr(b.phi_true), "" if b.v_true is None else repr(b.v_true)]
        writer.writerow(row)


def read_batches_csv(stream) -> list:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    out = []
    for row in csv.DictReader(stream):
        truth = {k: float(row[k]) if row.get(k) not in (None, "") else None for k in TRUTH_COLUMNS}
        out.append(
            CountBatch(
                t=float(row["t"]),
                setting=MeasurementSetting(float(row["theta0"])),
                counts=tuple(int(row[f"n{k}"]) for k in range(4)),
                duration=float(row["duration"]),
                **truth,
            )
        )
    return out
