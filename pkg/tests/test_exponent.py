"""Log-MGF series, exponent optimization, and closed-form baselines.

The log-MGF oracle is direct numerical quadrature of E[exp(t * g(n))] over
the sensing density, entirely independent of the Bessel-series evaluation.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from cmdetect.deflection import PerSensor, SystemConfig, TotalPower
from cmdetect.exponent import (
    ExponentError,
    exponent,
    log_mgf,
    log_mgf_prime,
    maf_exponent_pspc,
    maf_exponent_tpc,
    mdf_exponent_tpc,
    mixed_gaussian_channel_term,
    optimize_omega_exponent,
    pe_bahadur_rao,
)
from cmdetect.noise import (
    GaussianChannel,
    GaussianSensing,
    LaplaceChannel,
    LaplaceSensing,
    MixedGaussianChannel,
    UniformChannel,
    UniformSensing,
)


def make_cfg(sensing=None, channel=None, theta=2.0, n_sensors=40, power=None):
    return SystemConfig(
        theta=theta,
        n_sensors=n_sensors,
        power=power or TotalPower(1.0),
        sensing=sensing or GaussianSensing(1.0),
        channel=channel or GaussianChannel(1.0),
    )


def _quad_log_mgf(cfg, omega, t):
    """Quadrature oracle: log E[exp(t g(n))] + channel term, g from the
    per-sensor contribution to the test statistic under H0."""
    theta = cfg.theta
    half = omega * theta / 2.0

    def g(n):
        return 2.0 * math.sin(half) * math.cos(omega * n - half + math.pi / 2.0)

    sensing = cfg.sensing
    if isinstance(sensing, GaussianSensing):
        s = math.sqrt(sensing.var)
        pdf = lambda n: math.exp(-0.5 * (n / s) ** 2) / (s * math.sqrt(2 * math.pi))
        lim = 12.0 * s
    elif isinstance(sensing, LaplaceSensing):
        b = math.sqrt(sensing.b_sq)
        pdf = lambda n: math.exp(-abs(n) / b) / (2.0 * b)
        lim = 60.0 * b
    elif isinstance(sensing, UniformSensing):
        a = sensing.half_width
        pdf = lambda n: 1.0 / (2.0 * a)
        lim = a
    else:
        raise NotImplementedError
    val, _ = quad(lambda n: math.exp(t * g(n)) * pdf(n), -lim, lim, limit=400)
    ch = cfg.channel
    if isinstance(ch, GaussianChannel):
        c = ch.var * (1.0 - math.cos(omega * theta)) / (2.0 * cfg.total_power)
    elif isinstance(ch, MixedGaussianChannel):
        c = ch.var1 * (1.0 - math.cos(omega * theta)) / (2.0 * cfg.total_power)
    else:
        c = 0.0
    if not isinstance(cfg.power, TotalPower):
        c = 0.0
    return math.log(val) + c * t**2


@pytest.mark.parametrize(
    "sensing",
    [GaussianSensing(1.0), LaplaceSensing(0.5), UniformSensing(math.sqrt(3.0))],
    ids=lambda s: type(s).__name__,
)
@pytest.mark.parametrize("t", [-3.0, -1.0, -0.2, 0.5, 2.0])
def test_log_mgf_matches_quadrature(sensing, t):
    cfg = make_cfg(sensing=sensing)
    for omega in (0.4, 0.9, 1.3):
        assert log_mgf(cfg, omega, t) == pytest.approx(
            _quad_log_mgf(cfg, omega, t), rel=1e-8, abs=1e-10
        )


def test_log_mgf_zero_at_origin():
    cfg = make_cfg()
    assert log_mgf(cfg, 0.7, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_log_mgf_prime_matches_finite_difference():
    cfg = make_cfg(sensing=LaplaceSensing(0.4), theta=1.5)
    for t in (-2.0, -0.5, 1.0):
        h = 1e-6
        fd = (log_mgf(cfg, 0.8, t + h) - log_mgf(cfg, 0.8, t - h)) / (2.0 * h)
        assert log_mgf_prime(cfg, 0.8, t) == pytest.approx(fd, rel=1e-6)


def test_log_mgf_convex():
    cfg = make_cfg()
    ts = np.linspace(-4.0, 2.0, 25)
    vals = [log_mgf(cfg, 0.6, float(t)) for t in ts]
    second = np.diff(vals, 2)
    assert np.all(second > -1e-10)


def test_exponent_positive_and_tstar_negative():
    cfg = make_cfg()
    res = exponent(cfg, 0.6)
    assert res.epsilon > 0.0
    assert res.t_star < 0.0
    assert res.sigma_hat_sq > 0.0
    # minimum really is below the endpoints
    assert log_mgf(cfg, 0.6, res.t_star) < 0.0


def test_exponent_vacuous_when_statistic_degenerates():
    cfg = make_cfg(theta=2.0, power=PerSensor(1.0))
    res = exponent(cfg, math.pi)  # omega * theta = 2 pi: zero separation
    assert res.vacuous
    assert res.epsilon == 0.0


def test_pspc_gaussian_exponent_is_snr_over_eight():
    # supremum over omega of the per-sensor-constraint exponent
    for rho_s_db in (0.0, 7.0):
        rho_s = 10.0 ** (rho_s_db / 10.0)
        cfg = make_cfg(theta=math.sqrt(rho_s), power=PerSensor(1.0))
        _, eps = optimize_omega_exponent(cfg, n_grid=60)
        assert eps == pytest.approx(rho_s / 8.0, rel=0.02)


def test_laplace_channel_has_no_exponent():
    cfg = make_cfg(channel=LaplaceChannel(1.0))
    with pytest.raises(ExponentError):
        exponent(cfg, 0.6)


def test_uniform_channel_term_vanishes():
    """Bounded channel noise contributes nothing to the limiting log-MGF:
    empirically (1/L) log E[exp(t sqrt(L/P) v)] shrinks as L grows."""
    rng = np.random.default_rng(5)
    ch = UniformChannel(var=1.0)
    t = -2.0
    vals = []
    for L in (10, 1000):
        v = np.real(ch.sample(rng, 200_000))
        vals.append(np.log(np.mean(np.exp(t * math.sqrt(L) * v))) / L)
    # decay is O(1/sqrt(L)): a factor-100 increase in L shrinks it ~10x
    assert abs(vals[1]) < abs(vals[0]) / 2.0
    cfg = make_cfg(channel=ch)
    res = exponent(cfg, 0.6)
    gauss_free = exponent(make_cfg(power=PerSensor(1.0 / 40)), 0.6)
    assert res.epsilon == pytest.approx(gauss_free.epsilon, rel=1e-9)


def test_mixed_gaussian_channel_term_uses_heavy_component():
    mix = MixedGaussianChannel(var0=0.25, p0=0.8, var1=4.0, p1=0.2)
    val = mixed_gaussian_channel_term(-1.5, 0.6, 2.0, 1.0, mix)
    expected = (-1.5) ** 2 * 4.0 * (1.0 - math.cos(0.6 * 2.0)) / 2.0
    assert val == pytest.approx(expected)
    with pytest.raises(TypeError):
        mixed_gaussian_channel_term(-1.0, 0.6, 2.0, 1.0, GaussianChannel(1.0))


def test_mixed_channel_exponent_below_gaussian():
    mix = MixedGaussianChannel(var0=0.25, p0=0.8, var1=4.0, p1=0.2)
    cfg_mix = make_cfg(channel=mix)
    cfg_gauss = make_cfg(channel=GaussianChannel(mix.effective_var))
    assert exponent(cfg_mix, 0.6).epsilon < exponent(cfg_gauss, 0.6).epsilon


def test_bahadur_rao_decreases_with_sensor_count():
    cfg = make_cfg(theta=1.0)
    pes = [pe_bahadur_rao(cfg, 0.8, n_sensors=L) for L in (10, 20, 40, 80)]
    assert all(a > b for a, b in zip(pes, pes[1:]))
    assert all(0.0 < p < 1.0 for p in pes[1:])


def test_maf_baselines():
    assert maf_exponent_pspc(2.0) == pytest.approx(0.25)
    val = maf_exponent_tpc(theta=2.0, sigma_n_sq=1.0, sigma_v_sq=1.0, p_total=1.0)
    assert val == pytest.approx(4.0 / (8.0 * (1.0 + (1.0 + 1.0))))
    with pytest.raises(NotImplementedError):
        mdf_exponent_tpc()


def test_exponent_result_reports_series_terms():
    res = exponent(make_cfg(), 0.6)
    assert 1 <= res.series_terms_used <= 500
