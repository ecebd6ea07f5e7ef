"""Scenario configuration: TOML files, packaged scenarios, flag overrides."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .estimation import EstimatorConfig
from .kinetics import KineticsModel, inhibition_scenario
from .optics import ProbeModel
from .photon_sim import DriftModel, Schedule
from .tracker import DEFAULT_THETA0, TrackerConfig

OUTPUT_DIR_ENV = "NOONTRACK_OUTPUT_DIR"

DEFAULTS = {
    "name": "custom",
    "seed": 0,
    "probe": {"photon_number": 2, "visibility": 0.92, "efficiency": 0.05, "flux": 2000.0},
    "kinetics": {
        "phi_initial_deg": 7.3,
        "phi_final_deg": -2.2,
        "tau_s": 900.0,
        "t0_s": 0.0,
        "c0_molar": 0.8,
        "inhibition": "none",
    },
    "inhibition_table": {},
    "schedule": {"interval_s": 37.0, "horizon_s": 4440.0, "start_s": 300.0},
    "drift": {"v_initial": 0.92, "v_slope_per_s": -5e-6, "v_noise_sd": 0.01},
    "estimator": {"n_phi": 512, "n_v": 101, "window_deg": 180.0, "sequential_prior": False},
    "adaptive": {"enabled": True, "default_theta0_deg": math.degrees(DEFAULT_THETA0)},
    "output": {"directory": "", "prefix": ""},
}


class ConfigParseError(Exception):
    pass


class ConfigValidationError(Exception):
    pass


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def packaged_scenarios() -> list:
    files = resources.files("noontrack").joinpath("scenarios")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".toml"))


def load_raw(source: str) -> dict:
    """Parse a TOML file, or a packaged scenario by name."""
    path = Path(source)
    try:
        if path.is_file():
            text = path.read_text(encoding="utf-8")
        elif source in packaged_scenarios():
            text = resources.files("noontrack").joinpath("scenarios", f"{source}.toml").read_text(encoding="utf-8")
        else:
            raise ConfigParseError(f"no config file or packaged scenario named {source!r}")
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"{source}: {exc}") from exc
    except OSError as exc:
        raise ConfigParseError(f"{source}: {exc}") from exc


def apply_overrides(raw: dict, assignments: list) -> dict:
    """Apply ``section.key=value`` strings; values are parsed as TOML scalars."""
    out = copy.deepcopy(raw)
    for item in assignments:
        if "=" not in item:
            raise ConfigParseError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        try:
            value = tomllib.loads(f"v = {text.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = text.strip()
        node = out
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    probe: ProbeModel
    kinetics: KineticsModel
    inhibition_label: str
    schedule: Schedule
    drift: DriftModel
    tracker: TrackerConfig
    output_dir: Path
    prefix: str
    resolved: dict

    @property
    def config_hash(self) -> str:
        return config_hash(self.resolved)


def config_hash(resolved: dict) -> str:
    """sha256 of the resolved config; the output section does not affect results and is left out."""
    content = {k: v for k, v in resolved.items() if k != "output"}
    blob = json.dumps(content, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def resolve(raw: dict) -> ScenarioConfig:
    """Fill defaults and validate every sub-config against its module invariants."""
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigValidationError(f"unknown config sections: {sorted(unknown)}")
    cfg = _merge(DEFAULTS, raw)
    for section, defaults in DEFAULTS.items():
        if isinstance(defaults, dict) and section != "inhibition_table":
            extra = set(cfg[section]) - set(defaults) - ({"seed"} if section == "kinetics" else set())
            if extra:
                raise ConfigValidationError(f"unknown keys in [{section}]: {sorted(extra)}")
    if "seed" in cfg["kinetics"]:
        cfg["seed"] = cfg["kinetics"].pop("seed")
    try:
        kin = cfg["kinetics"]
        inh = kin["inhibition"]
        if isinstance(inh, str):
            label, inhibition = inh, inhibition_scenario(inh, cfg["inhibition_table"])
        else:
            label, inhibition = "custom", float(inh)
        probe = ProbeModel(int(cfg["probe"]["photon_number"]), float(cfg["probe"]["visibility"]),
                           float(cfg["probe"]["efficiency"]), float(cfg["probe"]["flux"]))
        kinetics = KineticsModel(
            math.radians(float(kin["phi_initial_deg"])),
            math.radians(float(kin["phi_final_deg"])),
            float(kin["tau_s"]),
            float(kin["t0_s"]),
            float(kin["c0_molar"]),
            inhibition,
        )
        sch = cfg["schedule"]
        schedule = Schedule(float(sch["interval_s"]), float(sch["horizon_s"]), float(sch["start_s"]))
        if schedule.start < kinetics.t0:
            raise ValueError("schedule.start_s must not precede kinetics.t0_s")
        seed = int(cfg["seed"])
        dr = cfg["drift"]
        drift = DriftModel(float(dr["v_initial"]), float(dr["v_slope_per_s"]), float(dr["v_noise_sd"]), seed + 1)
        if not 0.0 <= drift.v_initial <= 1.0 or drift.v_noise_sd < 0:
            raise ValueError("drift.v_initial must lie in [0, 1] and v_noise_sd >= 0")
        est = cfg["estimator"]
        if abs(float(est["window_deg"]) - 180.0) > 1e-9:
            raise ValueError("estimator.window_deg must equal the phase period (180)")
        estimator = EstimatorConfig(int(est["n_phi"]), int(est["n_v"]), sequential_prior=bool(est["sequential_prior"]))
        ad = cfg["adaptive"]
        tracker = TrackerConfig(
            adaptive=bool(ad["enabled"]),
            default_theta0=math.radians(float(ad["default_theta0_deg"])),
            initial_center=kinetics.phi_initial,
            estimator=estimator,
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigValidationError(str(exc)) from exc
    cfg["resolved_inhibition"] = inhibition
    out_dir = cfg["output"]["directory"] or os.environ.get(OUTPUT_DIR_ENV, "") or "noontrack-out"
    prefix = cfg["output"]["prefix"] or str(cfg["name"])
    return ScenarioConfig(str(cfg["name"]), seed, probe, kinetics, label, schedule, drift, tracker,
                          Path(out_dir), prefix, cfg)


def load_config(source: str, overrides: list = ()) -> ScenarioConfig:
    return resolve(apply_overrides(load_raw(source), list(overrides)))
