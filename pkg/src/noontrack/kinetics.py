"""Ground-truth enzymatic phase evolution and phase-to-concentration map."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Fractional activity loss after illumination. red_1h and blue_1h are the
# measured 5 % and 25 %; the shorter blue exposures are illustrative.
INHIBITION_SCENARIOS = {
    "none": 0.0,
    "red_1h": 0.05,
    "blue_10min": 0.10,
    "blue_30min": 0.18,
    "blue_1h": 0.25,
}
ILLUSTRATIVE_SCENARIOS = frozenset({"blue_10min", "blue_30min"})


def inhibition_scenario(label: str, table: dict | None = None) -> float:
    """Activity-reduction fraction for a named illumination scenario."""
    table = INHIBITION_SCENARIOS if table is None else {**INHIBITION_SCENARIOS, **table}
    try:
        return float(table[label])
    except KeyError:
        raise ValueError(f"unknown inhibition scenario {label!r}; expected one of {sorted(table)}") from None


@dataclass(frozen=True)
class KineticsModel:
    """First-order substrate decay seen through the optical phase.

    The phase relaxes from ``phi_initial`` to ``phi_final`` with time
    constant ``tau / (1 - inhibition)``.
    """

    phi_initial: float
    phi_final: float
    tau: float
    t0: float = 0.0
    c_initial: float = 0.8
    inhibition: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.phi_initial == self.phi_final:
            raise ValueError("phi_initial and phi_final must differ")
        if not self.c_initial > 0:
            raise ValueError(f"c_initial must be positive, got {self.c_initial}")
        if not 0.0 <= self.inhibition <= 1.0:
            raise ValueError(f"inhibition must lie in [0, 1], got {self.inhibition}")

    @property
    def rate(self) -> float:
        """Effective first-order rate constant in 1/s."""
        return (1.0 - self.inhibition) / self.tau


def phase_at(model: KineticsModel, t):
    """Phase at time ``t`` (scalar or array, all ``t >= t0``)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < model.t0):
        raise ValueError(f"t must not precede t0={model.t0}")
    out = model.phi_final + (model.phi_initial - model.phi_final) * np.exp(-(t_arr - model.t0) * model.rate)
    return float(out) if out.ndim == 0 else out


def concentration_from_phase(model: KineticsModel, phi):
    """Substrate concentration (molar) implied by a phase; not clamped."""
    span = model.phi_initial - model.phi_final
    if span == 0:
        raise ValueError("degenerate kinetics model: phi_initial == phi_final")
    out = model.c_initial * (np.asarray(phi, dtype=float) - model.phi_final) / span
    return float(out) if np.ndim(out) == 0 else out


def concentration_sd(model: KineticsModel, phi_sd):
    """Linear propagation of a phase sd through the concentration map."""
    span = abs(model.phi_initial - model.phi_final)
    return model.c_initial * np.asarray(phi_sd, dtype=float) / span


def concentration_at(model: KineticsModel, t):
    """Ground-truth concentration, ``c_initial * exp(-rate (t - t0))``."""
    t_arr = np.asarray(t, dtype=float)
    out = model.c_initial * np.exp(-(t_arr - model.t0) * model.rate)
    return float(out) if out.ndim == 0 else out

