"""Experiment runner CLI: sweeps, recipe bundles and result emission.

Subcommands:
  run <spec>            run an experiment file (or bundled recipe name)
  list-recipes          show the bundled recipe names
  optimize-omega <spec> print the deflection-optimal omega for the base config

Environment overrides: CMDETECT_THREADS (worker count), CMDETECT_OUT
(output directory).  Exit codes: 0 success, 2 config error, 3 computation
error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentSpec, db_to_linear, load_spec, spec_hash
from .deflection import SystemConfig, dc_fading, dc_tpc, optimize_omega
from .exponent import ExponentError, exponent, optimize_omega_exponent, pe_bahadur_rao
from .noise import (
    GaussianChannel,
    GaussianSensing,
    LaplaceChannel,
    LaplaceSensing,
    MixedGaussianChannel,
    NoFading,
    UniformChannel,
    UniformSensing,
)
from .simulate import TrialBatch, estimate_pe

__all__ = ["ResultRow", "run_experiment", "emit", "list_recipes", "main"]

_COLUMNS = (
    "sweep_value",
    "omega_used",
    "dc",
    "epsilon",
    "pe_theory",
    "pe_mc",
    "pe_mc_ci",
    "seed",
    "error",
)


@dataclass(frozen=True)
class ResultRow:
    sweep_value: float
    omega_used: float | None = None
    dc: float | None = None
    epsilon: float | None = None
    pe_theory: float | None = None
    pe_mc: float | None = None
    pe_mc_ci: float | None = None
    seed: int | None = None
    error: str | None = None


def _sensing_var(sensing) -> float:
    if isinstance(sensing, GaussianSensing):
        return sensing.var
    if isinstance(sensing, LaplaceSensing):
        return 2.0 * sensing.b_sq
    if isinstance(sensing, UniformSensing):
        return sensing.half_width**2 / 3.0
    raise ConfigError(
        "sensing SNR sweep needs a finite-variance sensing model; "
        "Cauchy has none — sweep theta (or gamma) directly instead"
    )


def _scale_channel(channel, factor: float):
    if isinstance(channel, GaussianChannel):
        return GaussianChannel(var=channel.var * factor)
    if isinstance(channel, LaplaceChannel):
        return LaplaceChannel(var=channel.var * factor)
    if isinstance(channel, UniformChannel):
        return UniformChannel(var=channel.var * factor)
    if isinstance(channel, MixedGaussianChannel):
        return MixedGaussianChannel(
            var0=channel.var0 * factor,
            p0=channel.p0,
            var1=channel.var1 * factor,
            p1=channel.p1,
        )
    raise ConfigError(f"cannot rescale channel {type(channel).__name__}")


def _config_at(spec: ExperimentSpec, value: float) -> SystemConfig:
    """Base config with the sweep axis moved to `value` (linear units)."""
    cfg = spec.base
    if spec.sweep == "omega":
        return cfg
    if spec.sweep == "theta":
        return replace(cfg, theta=float(value))
    if spec.sweep == "n_sensors":
        if value != int(value) or value < 1:
            raise ConfigError(f"n_sensors sweep value {value} is not a positive integer")
        return replace(cfg, n_sensors=int(value))
    if spec.sweep == "rho_s":
        var = _sensing_var(cfg.sensing)
        return replace(cfg, theta=math.sqrt(float(value) * var))
    if spec.sweep == "rho_c":
        target = cfg.total_power / float(value)
        factor = target / cfg.channel.effective_var
        return replace(cfg, channel=_scale_channel(cfg.channel, factor))
    raise ConfigError(f"unknown sweep axis {spec.sweep!r}")


def _pick_omega(spec: ExperimentSpec, cfg: SystemConfig, sweep_value: float) -> float:
    if spec.sweep == "omega":
        return float(sweep_value)
    if spec.omega_mode == "fixed":
        return float(spec.omega_fixed)
    if spec.omega_mode == "dc_optimal":
        return optimize_omega(cfg).omega_star
    return optimize_omega_exponent(cfg)[0]


def run_experiment(spec: ExperimentSpec, seed: int, threads: int = 1):
    """Yield one ResultRow per sweep grid point (errors recorded in-row)."""
    row_seeds = [
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(len(spec.grid))
    ]
    for i, raw_value in enumerate(spec.grid):
        value = db_to_linear(raw_value) if spec.grid_in_db else float(raw_value)
        errors: list[str] = []
        omega = dc = eps = pe_th = pe_mc = pe_ci = None
        row_seed = row_seeds[i] if "pe_montecarlo" in spec.outputs else None
        try:
            cfg = _config_at(spec, value)
            omega = _pick_omega(spec, cfg, value)
        except (ConfigError, ExponentError, ValueError, RuntimeError) as exc:
            yield ResultRow(sweep_value=raw_value, seed=row_seed, error=str(exc))
            continue
        if "dc" in spec.outputs:
            try:
                fn = dc_tpc if isinstance(cfg.fading, NoFading) else dc_fading
                dc = float(fn(cfg, omega))
            except (ValueError, RuntimeError) as exc:
                errors.append(f"dc: {exc}")
        if "exponent" in spec.outputs:
            try:
                eps = float(exponent(cfg, omega).epsilon)
            except (ExponentError, ValueError, RuntimeError) as exc:
                errors.append(f"exponent: {exc}")
        if "pe_bahadur_rao" in spec.outputs:
            try:
                pe_th = float(pe_bahadur_rao(cfg, omega))
            except (ExponentError, ValueError, RuntimeError) as exc:
                errors.append(f"pe_bahadur_rao: {exc}")
        if "pe_montecarlo" in spec.outputs:
            try:
                batch = TrialBatch(
                    cfg=cfg,
                    omega=omega,
                    n_trials=spec.mc.n_trials,
                    seed=row_seed,
                    hypothesis_mode=spec.mc.hypothesis_mode,
                )
                mc = estimate_pe(batch, n_workers=threads, min_errors=spec.mc.min_errors)
                pe_mc, pe_ci = mc.pe_hat, mc.ci_halfwidth_95
            except (ValueError, RuntimeError) as exc:
                errors.append(f"pe_montecarlo: {exc}")
        yield ResultRow(
            sweep_value=raw_value,
            omega_used=omega,
            dc=dc,
            epsilon=eps,
            pe_theory=pe_th,
            pe_mc=pe_mc,
            pe_mc_ci=pe_ci,
            seed=row_seed,
            error="; ".join(errors) or None,
        )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def emit(rows, fmt: str, path, *, seed: int, hash_: str) -> None:
    """Write rows to `path` as CSV or JSON lines.

    Output is deterministic: fixed column order, 17-significant-digit floats,
    and a header embedding the tool version, master seed and spec hash so a
    rerun with the same inputs is byte-identical.
    """
    path = Path(path)
    meta = {"version": __version__, "seed": seed, "spec_hash": hash_}
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# cmdetect {__version__} seed={seed} spec_hash={hash_}\n")
            writer = csv.writer(fh)
            writer.writerow(_COLUMNS)
            for row in rows:
                writer.writerow([_fmt(getattr(row, c)) for c in _COLUMNS])
    elif fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
            for row in rows:
                fh.write(json.dumps(dataclasses.asdict(row), sort_keys=True) + "\n")
    else:
        raise ConfigError(f"unknown output format {fmt!r}")


def _recipes_dir():
    return resources.files("cmdetect") / "recipes"


def list_recipes() -> list[str]:
    return sorted(p.name[: -len(".yaml")] for p in _recipes_dir().iterdir() if p.name.endswith(".yaml"))


def _resolve_spec_path(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    candidate = _recipes_dir() / f"{arg}.yaml"
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"no such experiment file or bundled recipe: {arg}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmdetect",
        description=(
            "Distributed-detection experiment runner: deflection, error "
            "exponents and Monte-Carlo error rates over a Gaussian MAC."
        ),
        epilog=(
            "Environment overrides: CMDETECT_THREADS sets the worker count, "
            "CMDETECT_OUT sets the output directory (flags take precedence)."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment spec or bundled recipe")
    p_run.add_argument("spec", help="path to an experiment YAML file, or a bundled recipe name")
    p_run.add_argument("--seed", type=int, default=None, help="master seed (default: from spec, else 12345)")
    p_run.add_argument("--threads", type=int, default=None, help="Monte-Carlo worker threads (default 1; env CMDETECT_THREADS)")
    p_run.add_argument("--out", default=None, help="output directory (default '.'; env CMDETECT_OUT)")
    p_run.add_argument("--format", choices=("csv", "jsonl"), default="csv", help="output format")

    sub.add_parser("list-recipes", help="list bundled experiment recipes")

    p_opt = sub.add_parser("optimize-omega", help="print the deflection-optimal omega for a spec's base config")
    p_opt.add_argument("spec", help="path to an experiment YAML file, or a bundled recipe name")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "list-recipes":
            for name in list_recipes():
                print(name)
            return 0

        spec_path = _resolve_spec_path(args.spec)
        spec = load_spec(spec_path)

        if args.command == "optimize-omega":
            try:
                res = optimize_omega(spec.base)
            except (ValueError, RuntimeError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 3
            print(res)
            return 0

        seed = args.seed
        if seed is None:
            seed = int(spec.raw.get("seed", 12345))
        threads = args.threads
        if threads is None:
            threads = int(os.environ.get("CMDETECT_THREADS", "1"))
        out_dir = args.out or os.environ.get("CMDETECT_OUT", ".")

        rows = list(run_experiment(spec, seed=seed, threads=threads))
        out_path = Path(out_dir) / f"{spec.name}.{args.format}"
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            emit(rows, args.format, out_path, seed=seed, hash_=spec_hash(spec.raw))
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return 4
        n_err = sum(1 for r in rows if r.error)
        print(f"{spec.name}: {len(rows)} rows ({n_err} with errors) -> {out_path}")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4
    except (ExponentError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
