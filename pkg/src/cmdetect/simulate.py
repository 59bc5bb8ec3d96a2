"""Monte-Carlo engine for the constant-modulus MAC detector.

Synthesizes the superposed received signal, applies the linear detector and
estimates the error probability with confidence intervals.  Trials are
partitioned into chunks with independently seeded child RNG streams derived
from the master seed, so results are reproducible and the chunk merge is
order-independent.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta as beta_dist

from .deflection import SystemConfig
from .noise import NoFading

__all__ = [
    "TrialBatch",
    "MonteCarloResult",
    "PhaseErrorSensing",
    "synthesize_received",
    "detect",
    "zstat",
    "estimate_pe",
    "phase_error_transform",
]

_CHUNK = 50_000


@dataclass(frozen=True)
class TrialBatch:
    cfg: SystemConfig
    omega: float
    n_trials: int
    seed: int
    hypothesis_mode: str = "h0_only"  # or "both"

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")
        if self.hypothesis_mode not in ("h0_only", "both"):
            raise ValueError("hypothesis_mode must be 'h0_only' or 'both'")


@dataclass(frozen=True)
class MonteCarloResult:
    errors: int
    trials: int
    pe_hat: float
    ci_halfwidth_95: float
    wall_time: float
    seed: int


def _received_batch(cfg: SystemConfig, omega: float, hypothesis: int, rng, count: int):
    """Vectorized draw of `count` received samples under one hypothesis."""
    L = cfg.n_sensors
    n = np.asarray(cfg.sensing.sample(rng, count * L)).reshape(count, L)
    x = n + cfg.theta if hypothesis == 1 else n
    phasors = np.exp(1j * omega * x)
    if not isinstance(cfg.fading, NoFading):
        phasors = phasors * cfg.fading.sample_envelope(rng, count * L).reshape(count, L)
    amp = math.sqrt(cfg.per_sensor_power)
    v = cfg.channel.sample(rng, count)
    return amp * phasors.sum(axis=1) + v


def synthesize_received(cfg: SystemConfig, omega: float, hypothesis: int, rng) -> complex:
    """One draw of the received FC signal y = amp * sum_i |h_i| e^{j w x_i} + v."""
    return complex(_received_batch(cfg, omega, hypothesis, rng, 1)[0])


def detect(y, omega: float, theta: float):
    """Linear detection rule: decide H1 iff Re[y e^{-j w theta}] > Re[y].

    Exact ties go to H0, deterministically.  Accepts scalars or arrays;
    returns 0/1 decisions of matching shape.
    """
    stat = np.real(np.asarray(y) * np.exp(-1j * omega * theta)) - np.real(np.asarray(y))
    decision = (stat > 0.0).astype(int)
    if np.isscalar(y) or np.asarray(y).ndim == 0:
        return int(decision)
    return decision


def _zstat_from_received(y, cfg: SystemConfig, omega: float):
    # Z_L = sqrt(L / P_T) * Re[y (1 - e^{-j w theta})]; Z_L < 0 iff the
    # detector errs under H0 (and, mirrored, under H1)
    scale = math.sqrt(cfg.n_sensors / cfg.total_power)
    return scale * np.real(np.asarray(y) * (1.0 - np.exp(-1j * omega * cfg.theta)))


def zstat(cfg: SystemConfig, omega: float, hypothesis: int, rng, count: int = 1):
    """Draw realizations of the test statistic Z_L(omega).

    Under H0 the summand is 2 sin(w theta/2) cos(w n_i - w theta/2 + pi/2);
    under H1 the cosine argument is mirrored.  The channel contributes
    sqrt(L / P_T) * (Re[v](1 - cos w theta) - Im[v] sin(w theta)).
    """
    theta = cfg.theta
    L = cfg.n_sensors
    n = np.asarray(cfg.sensing.sample(rng, count * L)).reshape(count, L)
    half = omega * theta / 2.0
    sign = 1.0 if hypothesis == 0 else -1.0
    summand = 2.0 * math.sin(half) * np.cos(omega * n + sign * (math.pi / 2.0 - half))
    if not isinstance(cfg.fading, NoFading):
        summand = summand * cfg.fading.sample_envelope(rng, count * L).reshape(count, L)
    v = cfg.channel.sample(rng, count)
    v_t = np.real(v) * (1.0 - math.cos(omega * theta)) - np.imag(v) * math.sin(omega * theta)
    z = summand.sum(axis=1) + math.sqrt(L / cfg.total_power) * v_t
    if count == 1:
        return float(z[0])
    return z


def _chunk_errors(batch: TrialBatch, rng, count: int) -> tuple[int, int]:
    cfg, omega = batch.cfg, batch.omega
    if batch.hypothesis_mode == "h0_only":
        y = _received_batch(cfg, omega, 0, rng, count)
        errors = int(np.count_nonzero(detect(y, omega, cfg.theta)))
        return errors, count
    n1 = count // 2
    n0 = count - n1
    y0 = _received_batch(cfg, omega, 0, rng, n0)
    y1 = _received_batch(cfg, omega, 1, rng, n1)
    errors = int(np.count_nonzero(detect(y0, omega, cfg.theta)))
    errors += int(np.count_nonzero(detect(y1, omega, cfg.theta) == 0))
    return errors, count


def _ci_halfwidth_95(errors: int, trials: int) -> float:
    if errors >= 30:
        p = errors / trials
        return 1.96 * math.sqrt(p * (1.0 - p) / trials)
    # Clopper-Pearson bound for sparse error counts
    lo = 0.0 if errors == 0 else beta_dist.ppf(0.025, errors, trials - errors + 1)
    hi = 1.0 if errors == trials else beta_dist.ppf(0.975, errors + 1, trials - errors)
    return (hi - lo) / 2.0


def estimate_pe(
    batch: TrialBatch,
    n_workers: int = 1,
    min_errors: int | None = None,
) -> MonteCarloResult:
    """Monte-Carlo error probability with a 95% confidence half-width.

    ``min_errors`` enables adaptive stopping: chunks are processed until the
    error count reaches the target or the trial cap is hit.  The chunk
    partition (and hence the result) is independent of ``n_workers``.
    """
    start = time.perf_counter()
    n_chunks = (batch.n_trials + _CHUNK - 1) // _CHUNK
    sizes = [min(_CHUNK, batch.n_trials - i * _CHUNK) for i in range(n_chunks)]
    streams = np.random.SeedSequence(batch.seed).spawn(n_chunks)

    errors = 0
    trials = 0
    if min_errors is not None or n_workers <= 1:
        for i in range(n_chunks):
            e, t = _chunk_errors(batch, np.random.default_rng(streams[i]), sizes[i])
            errors += e
            trials += t
            if min_errors is not None and errors >= min_errors:
                break
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = pool.map(
                lambda i: _chunk_errors(batch, np.random.default_rng(streams[i]), sizes[i]),
                range(n_chunks),
            )
        for e, t in results:
            errors += e
            trials += t

    return MonteCarloResult(
        errors=errors,
        trials=trials,
        pe_hat=errors / trials,
        ci_halfwidth_95=_ci_halfwidth_95(errors, trials),
        wall_time=time.perf_counter() - start,
        seed=batch.seed,
    )


@dataclass(frozen=True)
class PhaseErrorSensing:
    """Effective sensing noise n_i + phase_error / omega.

    Models imperfect phase correction over fading channels: the phase error
    folds into the sensing noise.  Sampler-only; there is no closed-form CF.
    """

    base: object
    phase_error: object
    omega: float

    def sample(self, rng, count: int):
        return np.asarray(self.base.sample(rng, count)) + np.asarray(
            self.phase_error.sample(rng, count)
        ) / self.omega


def phase_error_transform(sensing, phase_error_dist, omega: float) -> PhaseErrorSensing:
    """Fold a symmetric phase-error distribution into the sensing noise."""
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    return PhaseErrorSensing(base=sensing, phase_error=phase_error_dist, omega=omega)
