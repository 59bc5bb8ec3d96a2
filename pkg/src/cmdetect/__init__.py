"""Distributed detection over a Gaussian MAC with constant-modulus signaling.

Subpackages: noise models, deflection-coefficient optimization, error
exponents, Monte-Carlo channel simulation and an experiment-runner CLI.
"""

__version__ = "0.1.0"

from .deflection import (
    DeflectionResult,
    PerSensor,
    SystemConfig,
    TotalPower,
    dc_fading,
    dc_non_iid,
    dc_pspc,
    dc_tpc,
    optimize_omega,
)
from .exponent import ExponentResult, exponent, log_mgf, pe_bahadur_rao
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
    make_rng,
    split_rng,
)
from .simulate import MonteCarloResult, TrialBatch, detect, estimate_pe, synthesize_received, zstat
