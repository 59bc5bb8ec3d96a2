"""Experiment configuration: YAML schema, validation and spec hashing.

An experiment file names a sweep (omega / SNR / sensor count / theta), a
base system configuration with tagged noise records, the outputs to compute
and optional Monte-Carlo settings.  dB values are converted to linear scale
here, exactly once; everything downstream works in linear units.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import yaml

from .deflection import PerSensor, SystemConfig, TotalPower
from .noise import (
    CauchySensing,
    GaussianChannel,
    GaussianSensing,
    LaplaceChannel,
    LaplaceSensing,
    MixedGaussianChannel,
    NoFading,
    RayleighFading,
    UniformChannel,
    UniformSensing,
)

__all__ = [
    "ConfigError",
    "ExperimentSpec",
    "sensing_from_dict",
    "channel_from_dict",
    "fading_from_dict",
    "load_spec",
    "parse_spec",
    "spec_hash",
]

SWEEPS = ("omega", "rho_s", "rho_c", "n_sensors", "theta")
OUTPUTS = ("dc", "exponent", "pe_bahadur_rao", "pe_montecarlo")
OMEGA_MODES = ("fixed", "dc_optimal", "exponent_optimal")


class ConfigError(ValueError):
    pass


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def sensing_from_dict(d: dict):
    """Tagged record -> sensing noise, e.g. {kind: cauchy, gamma: 1.0}."""
    _require(isinstance(d, dict) and "kind" in d, "sensing record needs a 'kind' tag")
    kind = d["kind"]
    try:
        if kind == "gaussian":
            return GaussianSensing(var=float(d["var"]))
        if kind == "cauchy":
            return CauchySensing(gamma=float(d["gamma"]))
        if kind == "laplace":
            if "b_sq" in d:
                return LaplaceSensing(b_sq=float(d["b_sq"]))
            return LaplaceSensing(b_sq=float(d["var"]) / 2.0)
        if kind == "uniform":
            if "half_width" in d:
                return UniformSensing(half_width=float(d["half_width"]))
            return UniformSensing(half_width=math.sqrt(3.0 * float(d["var"])))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad sensing record {d!r}: {exc}") from exc
    raise ConfigError(f"unknown sensing kind {kind!r}")


def channel_from_dict(d: dict):
    _require(isinstance(d, dict) and "kind" in d, "channel record needs a 'kind' tag")
    kind = d["kind"]
    try:
        if kind == "gaussian":
            return GaussianChannel(var=float(d["var"]))
        if kind == "mixed_gaussian":
            return MixedGaussianChannel(
                var0=float(d["var0"]), p0=float(d["p0"]),
                var1=float(d["var1"]), p1=float(d["p1"]),
            )
        if kind == "laplace":
            return LaplaceChannel(var=float(d["var"]))
        if kind == "uniform":
            return UniformChannel(var=float(d["var"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad channel record {d!r}: {exc}") from exc
    raise ConfigError(f"unknown channel kind {kind!r}")


def fading_from_dict(d: dict | None):
    if d is None:
        return NoFading()
    _require(isinstance(d, dict) and "kind" in d, "fading record needs a 'kind' tag")
    kind = d["kind"]
    if kind == "none":
        return NoFading()
    if kind == "rayleigh":
        return RayleighFading()
    raise ConfigError(f"unknown fading kind {kind!r}")


def _power_from_dict(d: dict):
    _require(isinstance(d, dict) and "mode" in d, "power record needs a 'mode'")
    mode = d["mode"]
    value = float(d.get("value_db")) if "value_db" in d else None
    if value is not None:
        value = db_to_linear(value)
    else:
        _require("value" in d, "power record needs 'value' or 'value_db'")
        value = float(d["value"])
    if mode == "total":
        return TotalPower(value)
    if mode == "per_sensor":
        return PerSensor(value)
    raise ConfigError(f"unknown power mode {mode!r}")


@dataclass(frozen=True)
class MonteCarloSettings:
    n_trials: int = 100_000
    min_errors: int | None = None
    hypothesis_mode: str = "h0_only"


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    sweep: str
    grid: tuple[float, ...]
    base: SystemConfig
    outputs: tuple[str, ...]
    omega_mode: str = "dc_optimal"
    omega_fixed: float | None = None
    grid_in_db: bool = False
    mc: MonteCarloSettings = field(default_factory=MonteCarloSettings)
    raw: dict = field(default_factory=dict, compare=False, repr=False)


def parse_spec(doc: dict) -> ExperimentSpec:
    """Validate a parsed YAML document into an ExperimentSpec."""
    _require(isinstance(doc, dict), "experiment spec must be a mapping")
    _require("name" in doc and isinstance(doc["name"], str), "spec needs a string 'name'")
    sweep = doc.get("sweep", {})
    _require(isinstance(sweep, dict), "'sweep' must be a mapping")
    axis = sweep.get("axis")
    _require(axis in SWEEPS, f"sweep axis must be one of {SWEEPS}, got {axis!r}")
    grid = sweep.get("grid")
    _require(isinstance(grid, list) and len(grid) > 0, "sweep grid must be a non-empty list")
    grid = tuple(float(g) for g in grid)
    _require(all(b > a for a, b in zip(grid, grid[1:])), "sweep grid must be strictly increasing")

    base = doc.get("base", {})
    _require(isinstance(base, dict), "'base' must be a mapping")
    try:
        cfg = SystemConfig(
            theta=float(base["theta"]),
            n_sensors=int(base["n_sensors"]),
            power=_power_from_dict(base["power"]),
            sensing=sensing_from_dict(base["sensing"]),
            channel=channel_from_dict(base["channel"]),
            fading=fading_from_dict(base.get("fading")),
            priors=tuple(base.get("priors", (0.5, 0.5))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad base config: {exc}") from exc

    outputs = doc.get("outputs")
    _require(
        isinstance(outputs, list) and len(outputs) > 0,
        "'outputs' must be a non-empty list",
    )
    for o in outputs:
        _require(o in OUTPUTS, f"unknown output {o!r}; choose from {OUTPUTS}")

    omega = doc.get("omega", {"mode": "dc_optimal"})
    _require(isinstance(omega, dict), "'omega' must be a mapping")
    omega_mode = omega.get("mode", "dc_optimal")
    _require(omega_mode in OMEGA_MODES, f"omega mode must be one of {OMEGA_MODES}")
    omega_fixed = omega.get("value")
    if omega_mode == "fixed" and axis != "omega":
        _require(omega_fixed is not None, "fixed omega mode needs omega.value")
    if omega_fixed is not None:
        omega_fixed = float(omega_fixed)
        _require(omega_fixed > 0, "omega.value must be positive")

    mc_doc = doc.get("mc", {})
    _require(isinstance(mc_doc, dict), "'mc' must be a mapping")
    mc = MonteCarloSettings(
        n_trials=int(mc_doc.get("n_trials", 100_000)),
        min_errors=mc_doc.get("min_errors"),
        hypothesis_mode=mc_doc.get("hypothesis_mode", "h0_only"),
    )
    _require(mc.n_trials >= 1, "mc.n_trials must be >= 1")
    _require(mc.hypothesis_mode in ("h0_only", "both"), "bad mc.hypothesis_mode")

    return ExperimentSpec(
        name=doc["name"],
        sweep=axis,
        grid=grid,
        base=cfg,
        outputs=tuple(outputs),
        omega_mode=omega_mode,
        omega_fixed=omega_fixed,
        grid_in_db=bool(sweep.get("in_db", axis in ("rho_s", "rho_c"))),
        mc=mc,
        raw=doc,
    )


def load_spec(path) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_spec(doc)


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return obj


def spec_hash(doc: dict) -> str:
    """Hash of the semantically meaningful content, invariant to key order."""
    blob = json.dumps(_canonical(doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
