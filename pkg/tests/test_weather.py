import math

import mpmath
import numpy as np
import pytest
from scipy import integrate, optimize, stats

from idsor.errors import ConfigError, FitError
from idsor.weather import (
    DEFAULT_PARAMS,
    ELEVATION_LIMIT,
    GammaParams,
    alpha_weight,
    build_histogram,
    fit_gamma_mom,
    gamma_pdf,
    sample_weather_points,
)
from idsor.core import compute_ranges

PAPER = GammaParams(2.15, 2.38)


def mp_gamma_pdf(k, theta, r):
    mpmath.mp.dps = 50
    k, theta, r = mpmath.mpf(k), mpmath.mpf(theta), mpmath.mpf(r)
    return float(r ** (k - 1) * mpmath.exp(-r / theta) / (mpmath.gamma(k) * theta**k))


# values frozen from the mpmath evaluation above (50 digits)
def test_pdf_at_mode_frozen_reference():
    assert gamma_pdf(PAPER, 2.737) == pytest.approx(0.14560905013129906, rel=1e-12)
    assert mp_gamma_pdf(2.15, 2.38, 2.737) == pytest.approx(0.14560905013129906, rel=1e-15)


@pytest.mark.parametrize("k", [0.3, 1.0, 2.15, 7.5, 25.0, 50.0])
@pytest.mark.parametrize("theta", [0.5, 2.38, 10.0])
@pytest.mark.parametrize("r", [1e-3, 0.7, 2.737, 11.0, 60.0])
def test_pdf_matches_high_precision(k, theta, r):
    expected = mp_gamma_pdf(k, theta, r)
    if expected < 1e-290:
        pytest.skip("below double range")
    assert gamma_pdf(GammaParams(k, theta), r) == pytest.approx(expected, rel=1e-12)


def test_pdf_edges():
    assert gamma_pdf(PAPER, 0.0) == 0.0
    assert gamma_pdf(PAPER, -1.0) == 0.0
    assert gamma_pdf(GammaParams(1.0, 2.0), 0.0) == 0.5
    assert gamma_pdf(GammaParams(0.5, 2.0), 0.0) == math.inf
    with pytest.raises(ValueError):
        gamma_pdf(PAPER, math.nan)
    with pytest.raises(ValueError):
        gamma_pdf(PAPER, np.array([1.0, np.inf]))


def test_pdf_vectorised():
    r = np.array([-1.0, 0.0, 1.0, 5.0])
    out = gamma_pdf(PAPER, r)
    assert out.shape == (4,)
    assert out[2] == pytest.approx(mp_gamma_pdf(2.15, 2.38, 1.0), rel=1e-12)


def test_pdf_integrates_to_one():
    val, _ = integrate.quad(lambda r: gamma_pdf(PAPER, r), 0, np.inf, epsabs=1e-12, epsrel=1e-12)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_pdf_mode():
    res = optimize.minimize_scalar(lambda r: -gamma_pdf(PAPER, r), bounds=(0.1, 20), method="bounded",
                                   options={"xatol": 1e-8})
    assert res.x == pytest.approx(2.737, abs=1e-3)
    assert PAPER.mode == pytest.approx(2.737, abs=1e-12)


@pytest.mark.parametrize("bad", [(0, 1), (1, 0), (-1, 1), (math.inf, 1), (1, math.nan)])
def test_params_validated(bad):
    with pytest.raises(ConfigError):
        GammaParams(*bad)


def test_histogram_half_open_bins():
    h = build_histogram([0.5, 2.9, 3.0], 3.0)
    np.testing.assert_array_equal(h.counts, [2, 1])
    np.testing.assert_array_equal(h.bin_starts, [0.0, 3.0])
    assert h.total == 3
    assert len(build_histogram([], 3.0).counts) == 0
    with pytest.raises(ConfigError):
        build_histogram([1.0], 0.0)


def test_histogram_edges_exact(rng):
    w = 0.1
    r = np.concatenate([np.arange(50) * w, rng.uniform(0, 5, 1000)])
    h = build_histogram(r, w)
    b = np.repeat(np.arange(len(h.counts)), h.counts)
    rs = np.sort(r)
    assert np.all(rs >= b * w) and np.all(rs < (b + 1) * w)
    assert h.total == len(r)


def test_histogram_matches_pdf_chi_square():
    rng = np.random.default_rng(7)
    r = rng.gamma(2.15, 2.38, size=10_000)
    h = build_histogram(r, 3.0)
    edges = np.arange(len(h.counts) + 1) * 3.0
    cdf = stats.gamma(a=2.15, scale=2.38).cdf(edges)
    expected = np.diff(cdf) * len(r)
    # pool sparse tail bins so each expected count is >= 5
    keep = expected >= 5
    obs = np.append(h.counts[keep], h.counts[~keep].sum())
    exp = np.append(expected[keep], len(r) - expected[keep].sum())
    _, p = stats.chisquare(obs, exp)
    assert p > 0.01
    np.testing.assert_allclose(h.density.sum() * 3.0, 1.0)


def test_mom_exact_moments():
    m, v = PAPER.mean, PAPER.variance
    fit = fit_gamma_mom([m - math.sqrt(v), m + math.sqrt(v)])
    assert fit.k == pytest.approx(2.15, rel=1e-12)
    assert fit.theta == pytest.approx(2.38, rel=1e-12)


def test_mom_rounded_moments():
    sd = math.sqrt(12.17815)
    fit = fit_gamma_mom([5.117 - sd, 5.117 + sd])
    assert fit.k == pytest.approx(2.15, rel=1e-4)
    assert fit.theta == pytest.approx(2.38, rel=1e-4)


@pytest.mark.parametrize("samples", [[4.0, 4.0, 4.0], [3.0], []])
def test_mom_degenerate(samples):
    with pytest.raises(FitError):
        fit_gamma_mom(samples)


def test_mom_recovers_paper_params():
    r = np.random.default_rng(2024).gamma(2.15, 2.38, size=100_000)
    fit = fit_gamma_mom(r)
    assert abs(fit.k / 2.15 - 1) < 0.05
    assert abs(fit.theta / 2.38 - 1) < 0.05


def test_alpha_examples():
    assert alpha_weight(PAPER, 0.0, 3.0) == 0.0
    r = 4.0
    assert alpha_weight(PAPER, 1.0 / gamma_pdf(PAPER, r), r) == pytest.approx(0.5, rel=1e-14)
    assert alpha_weight(PAPER, 1e15, 2.737) == pytest.approx(1.0, abs=1e-12)
    assert alpha_weight(PAPER, 50.0, 0.0) == 0.0
    with pytest.raises(ConfigError):
        alpha_weight(PAPER, -1.0, 1.0)


def test_alpha_monotone_in_rho(rng):
    r = rng.uniform(0, 40, size=200)
    rhos = np.sort(rng.uniform(0, 1000, size=30))
    a = np.array([alpha_weight(PAPER, rho, r) for rho in rhos])
    assert np.all(np.diff(a, axis=0) >= 0)
    assert np.all((a >= 0) & (a < 1))


def test_alpha_unimodal_at_pdf_mode():
    r = np.linspace(0, 30, 30_001)
    a = alpha_weight(PAPER, 20.0, r)
    peak = np.argmax(a)
    assert r[peak] == pytest.approx(2.737, abs=1e-3)
    assert np.all(np.diff(a[: peak + 1]) >= 0)
    assert np.all(np.diff(a[peak:]) <= 0)


def test_sampler_basics():
    assert len(sample_weather_points(PAPER, 0, 1.0, seed=1)) == 0
    a = sample_weather_points(PAPER, 10, 20.0, seed=3)
    b = sample_weather_points(PAPER, 10, 20.0, seed=3)
    np.testing.assert_array_equal(a.as_array(), b.as_array())
    assert not np.array_equal(a.as_array(), sample_weather_points(PAPER, 10, 20.0, seed=4).as_array())


def test_sampler_distribution():
    c = sample_weather_points(PAPER, 100_000, 30.0, seed=11)
    r = compute_ranges(c)
    assert abs(r.mean() / 5.117 - 1) < 0.02
    elev = np.arcsin(c.xyz[:, 2] / r)
    assert np.all(np.abs(elev) <= ELEVATION_LIMIT + 1e-12)
    assert c.intensity.min() >= 0 and c.intensity.max() <= 30.0
    _, p = stats.kstest(r, stats.gamma(a=2.15, scale=2.38).cdf)
    assert p > 0.01
