"""Sensing-noise, channel-noise and fading models.

Every sensing-noise family exposes its characteristic function (CF) in
closed form together with a sampler; channel-noise families expose their
total complex variance and a sampler.  All sensing distributions are
symmetric about zero, so their CFs are real and even, and the
implementation evaluates them at ``abs(omega)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GaussianSensing",
    "CauchySensing",
    "LaplaceSensing",
    "UniformSensing",
    "SensingNoise",
    "GaussianChannel",
    "MixedGaussianChannel",
    "LaplaceChannel",
    "UniformChannel",
    "ChannelNoise",
    "NoFading",
    "RayleighFading",
    "FadingModel",
    "make_rng",
    "split_rng",
]


def make_rng(seed: int | None = None) -> np.random.Generator:
    """PCG64-backed generator; entropy-seeded when ``seed`` is None."""
    return np.random.default_rng(seed)


def split_rng(seed: int, n: int) -> list[np.random.Generator]:
    """Derive ``n`` independent child streams from a master seed.

    Uses SeedSequence spawning, so worker streams are statistically
    independent and the mapping (seed, n) -> streams is reproducible.
    """
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.default_rng(s) for s in children]


def _check_positive(value: float, name: str) -> None:
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be strictly positive and finite, got {value!r}")


# ---------------------------------------------------------------------------
# Sensing noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianSensing:
    """Zero-mean Gaussian sensing noise with variance ``var``."""

    var: float

    def __post_init__(self) -> None:
        _check_positive(self.var, "var")

    def cf(self, omega):
        omega = np.abs(omega)
        return np.exp(-0.5 * omega**2 * self.var)

    def one_minus_cf_sq(self, omega):
        """1 - cf(omega)^2, accurate for small omega."""
        omega = np.abs(omega)
        return -np.expm1(-(omega**2) * self.var)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.normal(0.0, math.sqrt(self.var), size=count)


@dataclass(frozen=True)
class CauchySensing:
    """Cauchy sensing noise with scale ``gamma`` (no finite moments)."""

    gamma: float

    def __post_init__(self) -> None:
        _check_positive(self.gamma, "gamma")

    def cf(self, omega):
        return np.exp(-self.gamma * np.abs(omega))

    def one_minus_cf_sq(self, omega):
        return -np.expm1(-2.0 * self.gamma * np.abs(omega))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        # inverse-CDF method: gamma * tan(pi * (U - 1/2))
        u = rng.random(count)
        return self.gamma * np.tan(np.pi * (u - 0.5))


@dataclass(frozen=True)
class LaplaceSensing:
    """Laplace sensing noise parameterized by ``b_sq`` = variance / 2."""

    b_sq: float

    def __post_init__(self) -> None:
        _check_positive(self.b_sq, "b_sq")

    @property
    def var(self) -> float:
        return 2.0 * self.b_sq

    def cf(self, omega):
        return 1.0 / (1.0 + self.b_sq * np.asarray(omega, dtype=float) ** 2)

    def one_minus_cf_sq(self, omega):
        x = self.b_sq * np.asarray(omega, dtype=float) ** 2
        return x * (2.0 + x) / (1.0 + x) ** 2

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.laplace(0.0, math.sqrt(self.b_sq), size=count)


@dataclass(frozen=True)
class UniformSensing:
    """Uniform sensing noise on [-a, a]; variance a^2 / 3."""

    half_width: float

    def __post_init__(self) -> None:
        _check_positive(self.half_width, "half_width")

    @property
    def var(self) -> float:
        return self.half_width**2 / 3.0

    def cf(self, omega):
        x = np.abs(omega) * self.half_width
        # series branch near 0 avoids the 0/0 of sin(x)/x
        out = np.where(
            x < 1e-6,
            1.0 - np.asarray(x) ** 2 / 6.0,
            np.sin(np.where(x < 1e-6, 1.0, x)) / np.where(x < 1e-6, 1.0, x),
        )
        if np.isscalar(omega):
            return float(out)
        return out

    def one_minus_cf_sq(self, omega):
        x = np.abs(omega) * self.half_width
        x_safe = np.where(x < 1e-3, 1.0, x)
        # series for 1 - sinc keeps precision where the direct form rounds to 0
        one_minus_c = np.where(
            x < 1e-3,
            np.asarray(x) ** 2 / 6.0 - np.asarray(x) ** 4 / 120.0,
            1.0 - np.sin(x_safe) / x_safe,
        )
        out = one_minus_c * (2.0 - one_minus_c)
        if np.isscalar(omega):
            return float(out)
        return out

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(-self.half_width, self.half_width, size=count)


SensingNoise = GaussianSensing | CauchySensing | LaplaceSensing | UniformSensing

#: families whose CF is strictly decreasing on omega > 0
DECREASING_CF_FAMILIES = (GaussianSensing, CauchySensing, LaplaceSensing)


# ---------------------------------------------------------------------------
# Channel noise (complex, zero mean)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianChannel:
    """Circular complex Gaussian, total variance ``var`` (var/2 per part)."""

    var: float

    def __post_init__(self) -> None:
        _check_positive(self.var, "var")

    @property
    def effective_var(self) -> float:
        return self.var

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        s = math.sqrt(self.var / 2.0)
        return rng.normal(0.0, s, size=count) + 1j * rng.normal(0.0, s, size=count)


@dataclass(frozen=True)
class MixedGaussianChannel:
    """Two-component Gaussian mixture: variance var0 w.p. p0, var1 w.p. p1."""

    var0: float
    p0: float
    var1: float
    p1: float

    def __post_init__(self) -> None:
        _check_positive(self.var0, "var0")
        _check_positive(self.var1, "var1")
        if not (0.0 <= self.p0 <= 1.0 and 0.0 <= self.p1 <= 1.0):
            raise ValueError("mixture probabilities must lie in [0, 1]")
        if abs(self.p0 + self.p1 - 1.0) > 1e-12:
            raise ValueError("mixture probabilities must sum to 1")
        if not self.var1 > self.var0:
            raise ValueError("var1 must exceed var0 (high-variance component second)")

    @property
    def effective_var(self) -> float:
        return self.p0 * self.var0 + self.p1 * self.var1

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        high = rng.random(count) < self.p1
        var = np.where(high, self.var1, self.var0)
        s = np.sqrt(var / 2.0)
        return rng.normal(0.0, 1.0, size=count) * s + 1j * rng.normal(0.0, 1.0, size=count) * s


@dataclass(frozen=True)
class LaplaceChannel:
    """Complex noise with iid real Laplace parts, each of variance var/2."""

    var: float

    def __post_init__(self) -> None:
        _check_positive(self.var, "var")

    @property
    def effective_var(self) -> float:
        return self.var

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        # real Laplace with variance var/2 has scale b where 2 b^2 = var/2
        b = math.sqrt(self.var / 4.0)
        return rng.laplace(0.0, b, size=count) + 1j * rng.laplace(0.0, b, size=count)


@dataclass(frozen=True)
class UniformChannel:
    """Complex noise with iid real uniform parts, each of variance var/2."""

    var: float

    def __post_init__(self) -> None:
        _check_positive(self.var, "var")

    @property
    def effective_var(self) -> float:
        return self.var

    @property
    def part_half_width(self) -> float:
        # uniform on [-a, a] has variance a^2/3 = var/2
        return math.sqrt(3.0 * self.var / 2.0)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        a = self.part_half_width
        return rng.uniform(-a, a, size=count) + 1j * rng.uniform(-a, a, size=count)


ChannelNoise = GaussianChannel | MixedGaussianChannel | LaplaceChannel | UniformChannel


# ---------------------------------------------------------------------------
# Fading
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoFading:
    """Deterministic unit channel gain."""

    def envelope_mean(self) -> float:
        return 1.0

    def sample_envelope(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return np.ones(count)


@dataclass(frozen=True)
class RayleighFading:
    """Phase-corrected Rayleigh fading, normalized so E[|h|^2] = 1.

    Only the envelope matters because sensors pre-rotate by the channel
    phase; E[|h|] = sqrt(pi)/2 under the unit-second-moment normalization.
    """

    def envelope_mean(self) -> float:
        return math.sqrt(math.pi) / 2.0

    def sample_envelope(self, rng: np.random.Generator, count: int) -> np.ndarray:
        # Rayleigh scale sigma with 2 sigma^2 = E[|h|^2] = 1
        return rng.rayleigh(scale=math.sqrt(0.5), size=count)


FadingModel = NoFading | RayleighFading
