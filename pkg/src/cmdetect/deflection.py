"""Deflection coefficient of the constant-modulus MAC detection scheme.

Implements the four variants of the deflection coefficient (iid total-power,
per-sensor/high-channel-SNR limit, non-homogeneous sensors, fading) and the
optimization of the transmit phase parameter omega.  For the Gaussian,
Cauchy and Laplace sensing families the optimizer solves the stationarity
equation of D(beta/theta) in beta = omega * theta, which has a unique root
in (0, pi); uniform sensing falls back to multi-start search because its CF
is not monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .noise import (
    CauchySensing,
    ChannelNoise,
    FadingModel,
    GaussianSensing,
    LaplaceSensing,
    NoFading,
    SensingNoise,
    UniformSensing,
)
from .rootfind import bracketed_root

__all__ = [
    "TotalPower",
    "PerSensor",
    "SystemConfig",
    "DeflectionResult",
    "DeflectionDomainError",
    "UnattainedSupremumError",
    "dc_tpc",
    "dc_pspc",
    "dc_non_iid",
    "dc_fading",
    "optimize_omega",
    "optimize_omega_grid",
    "cauchy_low_channel_snr_omega",
]

# offset from the endpoints of (0, pi) keeping clear of the tan(beta/2) pole
_BETA_EDGE = 1e-8


class DeflectionDomainError(ValueError):
    """Deflection coefficient evaluated where its denominator is invalid."""


class UnattainedSupremumError(ValueError):
    """The supremum over omega is a limit (omega -> 0), not an attained max."""


@dataclass(frozen=True)
class TotalPower:
    """Total power fixed at ``p_total``; per-sensor power is p_total / L."""

    p_total: float

    def __post_init__(self) -> None:
        if not self.p_total > 0.0:
            raise ValueError("p_total must be positive")


@dataclass(frozen=True)
class PerSensor:
    """Per-sensor power fixed at ``rho``; total power is rho * L."""

    rho: float

    def __post_init__(self) -> None:
        if not self.rho > 0.0:
            raise ValueError("rho must be positive")


@dataclass(frozen=True)
class SystemConfig:
    theta: float
    n_sensors: int
    power: TotalPower | PerSensor
    sensing: SensingNoise
    channel: ChannelNoise
    fading: FadingModel = field(default_factory=NoFading)
    priors: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self) -> None:
        if not self.theta > 0.0:
            raise ValueError("theta must be positive (negative theta by symmetry)")
        if self.n_sensors < 1:
            raise ValueError("n_sensors must be >= 1")
        if abs(self.priors[0] + self.priors[1] - 1.0) > 1e-12:
            raise ValueError("priors must sum to 1")

    @property
    def total_power(self) -> float:
        if isinstance(self.power, TotalPower):
            return self.power.p_total
        return self.power.rho * self.n_sensors

    @property
    def per_sensor_power(self) -> float:
        if isinstance(self.power, PerSensor):
            return self.power.rho
        return self.power.p_total / self.n_sensors

    @property
    def noise_power_ratio(self) -> float:
        """Channel variance over total power: the sigma_v^2 / P_T term."""
        return self.channel.effective_var / self.total_power


@dataclass(frozen=True)
class DeflectionResult:
    omega_star: float
    d_star: float
    bracket: tuple[float, float]
    iterations: int
    residual: float
    multimodal_flag: bool = False


def _one_minus_cos(x):
    """1 - cos(x) without cancellation near x = 0."""
    return 2.0 * np.sin(np.asarray(x) / 2.0) ** 2


def dc_tpc(cfg: SystemConfig, omega) -> float:
    """Deflection coefficient for iid sensors under the total power constraint:

        D(w) = 2 phi^2(w) (1 - cos(w theta)) / (1 - phi^2(w) + sigma_v^2 / P_T)
    """
    phi = cfg.sensing.cf(omega)
    denom = cfg.sensing.one_minus_cf_sq(omega) + cfg.noise_power_ratio
    if np.any(np.asarray(denom) <= 0.0):
        raise DeflectionDomainError("nonpositive denominator: invalid noise model")
    return 2.0 * phi**2 * _one_minus_cos(np.asarray(omega) * cfg.theta) / denom


def dc_pspc(sensing: SensingNoise, theta: float, omega) -> float:
    """Per-sensor-power-constraint (large-L) deflection coefficient.

    Equals dc_tpc with the sigma_v^2 / P_T term removed; undefined at omega = 0
    where both numerator and denominator vanish.
    """
    if np.any(np.asarray(omega) == 0.0):
        raise DeflectionDomainError("dc_pspc requires omega != 0")
    phi = sensing.cf(omega)
    return 2.0 * phi**2 * _one_minus_cos(np.asarray(omega) * theta) / sensing.one_minus_cf_sq(omega)


def dc_non_iid(theta: float, p_total: float, sigma_v_sq: float, sensing_list, omega) -> float:
    """Deflection coefficient for independent non-identically distributed sensors.

    Averages CF and squared CF over the sensor list; reduces to the iid
    expression when all entries are identical.
    """
    if len(sensing_list) == 0:
        raise ValueError("sensing_list must be non-empty")
    omega = np.asarray(omega, dtype=float)
    cf_mean = np.mean([s.cf(omega) for s in sensing_list], axis=0)
    cf_sq_mean = np.mean([s.cf(omega) ** 2 for s in sensing_list], axis=0)
    denom = 1.0 - cf_sq_mean + sigma_v_sq / p_total
    if np.any(denom <= 0.0):
        raise DeflectionDomainError("nonpositive denominator: invalid noise model")
    return 2.0 * _one_minus_cos(omega * theta) * cf_mean**2 / denom


def dc_fading(cfg: SystemConfig, omega) -> float:
    """Deflection coefficient with phase-corrected fading.

    The squared CF is scaled by (E[|h|])^2 in the numerator and in the
    subtracted denominator term; reduces bit-exactly to dc_tpc when the
    envelope is deterministic.
    """
    h2 = cfg.fading.envelope_mean() ** 2
    phi = cfg.sensing.cf(omega)
    denom = cfg.sensing.one_minus_cf_sq(omega) + (1.0 - h2) * phi**2 + cfg.noise_power_ratio
    if np.any(np.asarray(denom) <= 0.0):
        raise DeflectionDomainError("nonpositive denominator: invalid noise model")
    return 2.0 * h2 * phi**2 * _one_minus_cos(np.asarray(omega) * cfg.theta) / denom


def cauchy_low_channel_snr_omega(theta: float, gamma: float) -> float:
    """Closed-form optimizer for Cauchy sensing in the low-channel-SNR regime.

    Advisory value only; the exact optimizer comes from the root equation.
    """
    return (2.0 / theta) * math.atan(theta / (2.0 * gamma))


# ---------------------------------------------------------------------------
# Stationarity equations in beta = omega * theta (beta in (0, pi))
# ---------------------------------------------------------------------------

def _gauss_g(beta: float, alpha: float, s: float, h2: float) -> float:
    return alpha - h2 * math.exp(-s * beta**2) - 2.0 * s * alpha * beta * math.tan(beta / 2.0)


def _gauss_g_prime(beta: float, alpha: float, s: float, h2: float) -> float:
    sec2 = 1.0 / math.cos(beta / 2.0) ** 2
    return (
        2.0 * s * beta * h2 * math.exp(-s * beta**2)
        - 2.0 * s * alpha * (math.tan(beta / 2.0) + 0.5 * beta * sec2)
    )


def _cauchy_g(beta: float, alpha: float, c: float, h2: float) -> float:
    return alpha - h2 * math.exp(-c * beta) - c * alpha * math.tan(beta / 2.0)


def _cauchy_g_prime(beta: float, alpha: float, c: float, h2: float) -> float:
    sec2 = 1.0 / math.cos(beta / 2.0) ** 2
    return c * h2 * math.exp(-c * beta) - 0.5 * c * alpha * sec2


def _laplace_g(beta: float, alpha: float, q: float, h2: float) -> float:
    u = 1.0 + q * beta**2
    return u**2 - 4.0 * q * beta * u * math.tan(beta / 2.0) - h2 / alpha


def _laplace_g_prime(beta: float, alpha: float, q: float, h2: float) -> float:
    u = 1.0 + q * beta**2
    sec2 = 1.0 / math.cos(beta / 2.0) ** 2
    return (
        4.0 * q * beta * u
        - 4.0 * q * (1.0 + 3.0 * q * beta**2) * math.tan(beta / 2.0)
        - 2.0 * q * beta * u * sec2
    )


def _uniform_stationarity(beta: float, alpha: float, theta_over_a: float) -> float:
    # beta = omega * a here, valid on (0, pi * a / theta)
    csc2 = 1.0 / math.sin(beta) ** 2
    return (alpha * beta**2 * csc2 - 1.0) - alpha * beta * (2.0 / theta_over_a) * math.tan(
        0.5 * theta_over_a * beta
    ) * csc2 * (1.0 - beta / math.tan(beta))


def optimize_omega_grid(objective, lo: float, hi: float, n_points: int = 100_000):
    """Brute-force argmax of a vectorized objective on a grid over (lo, hi]."""
    omegas = np.linspace(lo, hi, n_points)
    values = objective(omegas)
    i = int(np.argmax(values))
    return float(omegas[i]), float(values[i])


def _refined_multistart(objective, lo: float, hi: float, n_starts: int = 64):
    """Multi-start local refinement; returns (omega, value, n_local_maxima)."""
    grid = np.linspace(lo, hi, n_starts + 1)[1:]
    vals = objective(grid)
    interior = (vals[1:-1] > vals[:-2]) & (vals[1:-1] >= vals[2:])
    n_local = int(np.count_nonzero(interior)) + int(vals[-1] > vals[-2]) + int(vals[0] > vals[1])
    best_w, best_v = None, -np.inf
    step = grid[1] - grid[0]
    for w0 in grid:
        res = minimize_scalar(
            lambda w: -float(objective(np.asarray([w]))[0]),
            bounds=(max(lo, w0 - step), min(hi, w0 + step)),
            method="bounded",
            options={"xatol": 1e-12},
        )
        w, v = float(res.x), -float(res.fun)
        # deterministic merge: max by value, ties to smaller omega
        if v > best_v + 1e-15 or (abs(v - best_v) <= 1e-15 and w < best_w):
            best_w, best_v = w, v
    return best_w, best_v, n_local


def optimize_omega(cfg: SystemConfig) -> DeflectionResult:
    """Maximize the deflection coefficient over omega > 0.

    Gaussian/Cauchy/Laplace sensing: solves the per-family stationarity
    equation in beta = omega * theta on (0, pi), which is proved to have a
    unique root when sigma_v^2 > 0; fading scales the equations by the
    squared envelope mean.  Uniform sensing uses the dedicated stationarity
    equation when theta / a >= 2 and multi-start search otherwise.
    """
    theta = cfg.theta
    ratio = cfg.noise_power_ratio
    alpha = 1.0 + ratio
    h2 = cfg.fading.envelope_mean() ** 2
    sensing = cfg.sensing
    fading = not isinstance(cfg.fading, NoFading)
    objective = (lambda w: dc_fading(cfg, w)) if fading else (lambda w: dc_tpc(cfg, w))

    if isinstance(sensing, UniformSensing):
        a = sensing.half_width
        if theta / a >= 2.0 and not fading:
            g = lambda b: _uniform_stationarity(b, alpha, theta / a)
            res = bracketed_root(g, _BETA_EDGE, math.pi * a / theta - _BETA_EDGE)
            w = res.root / a
            return DeflectionResult(
                omega_star=w,
                d_star=float(objective(np.asarray([w]))[0]),
                bracket=(_BETA_EDGE / a, math.pi / theta - _BETA_EDGE / a),
                iterations=res.iterations,
                residual=res.residual,
                multimodal_flag=False,
            )
        # beta = omega * a ranges over (0, pi a / theta], i.e. omega in (0, pi / theta]
        lo = _BETA_EDGE / a
        hi = math.pi / theta
        w, v, n_local = _refined_multistart(objective, lo, hi)
        return DeflectionResult(
            omega_star=w,
            d_star=v,
            bracket=(lo, hi),
            iterations=0,
            residual=float("nan"),
            multimodal_flag=n_local > 1,
        )

    if ratio == 0.0 and isinstance(sensing, (GaussianSensing, LaplaceSensing)):
        raise UnattainedSupremumError(
            "with sigma_v^2 = 0 the Gaussian/Laplace deflection supremum is a limit "
            "as omega -> 0 and is not attained; pick a small omega floor explicitly"
        )

    if isinstance(sensing, GaussianSensing):
        s = sensing.var / theta**2
        g = lambda b: _gauss_g(b, alpha, s, h2)
        gp = lambda b: _gauss_g_prime(b, alpha, s, h2)
    elif isinstance(sensing, CauchySensing):
        c = 2.0 * sensing.gamma / theta
        g = lambda b: _cauchy_g(b, alpha, c, h2)
        gp = lambda b: _cauchy_g_prime(b, alpha, c, h2)
    elif isinstance(sensing, LaplaceSensing):
        q = sensing.b_sq / theta**2
        g = lambda b: _laplace_g(b, alpha, q, h2)
        gp = lambda b: _laplace_g_prime(b, alpha, q, h2)
    else:  # pragma: no cover
        raise TypeError(f"unsupported sensing noise {type(sensing).__name__}")

    res = bracketed_root(g, _BETA_EDGE, math.pi - _BETA_EDGE, fprime=gp)
    w = res.root / theta
    return DeflectionResult(
        omega_star=w,
        d_star=float(objective(np.asarray([w]))[0]),
        bracket=(_BETA_EDGE / theta, (math.pi - _BETA_EDGE) / theta),
        iterations=res.iterations,
        residual=res.residual,
        multimodal_flag=False,
    )
