"""Model samplers, log-likelihoods and profile oracles vs independent checks."""

import math

import numpy as np
import pytest
from scipy.stats import norm, poisson

from plr.calibration import chi2_cdf
from plr.evaluation import ks_statistic
from plr.models import (GaussianModel, GaussianModelSpec, Observation, OnOffModel,
                        OnOffModelSpec, ThetaPoint, gaussian_loglik,
                        gaussian_profile_t, gaussian_profile_t_n, gaussian_sample,
                        gaussian_sample_n, onoff_loglik, onoff_mle, onoff_profile_t,
                        onoff_profile_t_n, onoff_sample, poisson_draw)

SPEC_I = GaussianModelSpec(np.eye(2))
SPEC_CORR = GaussianModelSpec(np.array([[1.0, 0.8], [0.8, 1.0]]))
SPEC_ONOFF = OnOffModelSpec(s=15.0, b=70.0, tau=1.0)


def golden_section_max(f, lo, hi, iters=200):
    """Maximize a unimodal scalar function on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def gaussian_profile_oracle(spec, x, mu0):
    """Numeric profile: grid plus golden-section refinement over nu."""
    def cond_ll(nu):
        return gaussian_loglik(spec, x, ThetaPoint(mu0, nu))

    center = x.x2
    grid = np.linspace(center - 10.0, center + 10.0, 2001)
    vals = [cond_ll(v) for v in grid]
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    _, best = golden_section_max(cond_ll, lo, hi)
    full = gaussian_loglik(spec, x, ThetaPoint(x.x1, x.x2))
    return -2.0 * (best - full)


def onoff_profile_oracle(spec, x, mu0, spacing=1e-4):
    """Brute-force grid over nu with golden-section refinement.

    Fully independent of the implementation: Poisson log-pmfs come from
    scipy, and rates are clamped at zero so evaluations at the feasibility
    boundary (where roundoff can leave the rate at -1e-16) stay defined.
    """
    nu_lo = max(0.0, -mu0 * spec.s / spec.b)
    nu_hi = max(1.0, 3.0 * x.x2 / (spec.tau * spec.b), (x.x1 + x.x2) / spec.b,
                nu_lo + 1.0) + 2.0

    def cond_ll(nu):
        lam1 = max(mu0 * spec.s + nu * spec.b, 0.0)
        lam2 = max(nu * spec.tau * spec.b, 0.0)
        return float(poisson.logpmf(x.x1, lam1) + poisson.logpmf(x.x2, lam2))

    n_pts = min(int((nu_hi - nu_lo) / spacing) + 2, 400_000)
    grid = np.linspace(nu_lo, nu_hi, n_pts)
    lam1 = np.maximum(mu0 * spec.s + grid * spec.b, 0.0)
    lam2 = np.maximum(grid * spec.tau * spec.b, 0.0)
    ll = poisson.logpmf(x.x1, lam1) + poisson.logpmf(x.x2, lam2)
    k = int(np.argmax(ll))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    _, best = golden_section_max(cond_ll, max(lo, nu_lo), hi)
    best = max(best, cond_ll(nu_lo))
    full = float(poisson.logpmf(x.x1, x.x1) + poisson.logpmf(x.x2, x.x2))
    return -2.0 * (best - full)


class TestGaussianSampler:
    def test_mean_within_clt_bound(self):
        rng = np.random.default_rng(0)
        draws = gaussian_sample_n(SPEC_I, ThetaPoint(0.0, 0.0), 100_000, rng)
        bound = 4.0 / math.sqrt(100_000)
        assert abs(draws[:, 0].mean()) < bound
        assert abs(draws[:, 1].mean()) < bound

    def test_covariance_recovered(self):
        rng = np.random.default_rng(1)
        draws = gaussian_sample_n(SPEC_CORR, ThetaPoint(0.5, -0.5), 100_000, rng)
        emp = np.cov(draws, rowvar=False)
        assert np.abs(emp - SPEC_CORR.cov).max() < 0.02

    def test_seed_determinism(self):
        a = gaussian_sample(SPEC_CORR, ThetaPoint(1.0, 2.0), np.random.default_rng(5))
        b = gaussian_sample(SPEC_CORR, ThetaPoint(1.0, 2.0), np.random.default_rng(5))
        assert a == b

    def test_non_spd_rejected(self):
        with pytest.raises(ValueError):
            GaussianModelSpec(np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(ValueError):
            GaussianModelSpec(np.array([[1.0, 0.1], [0.3, 1.0]]))


class TestGaussianLoglik:
    def test_density_at_mean(self):
        val = gaussian_loglik(SPEC_I, Observation(0.3, -0.7), ThetaPoint(0.3, -0.7))
        assert val == pytest.approx(-math.log(2.0 * math.pi), abs=1e-12)

    def test_translation_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            x = Observation(*rng.normal(size=2))
            th = ThetaPoint(*rng.normal(size=2))
            delta = rng.normal()
            shifted = gaussian_loglik(SPEC_CORR, Observation(x.x1 + delta, x.x2 + delta),
                                      ThetaPoint(th.mu + delta, th.nu + delta))
            assert shifted == pytest.approx(gaussian_loglik(SPEC_CORR, x, th), abs=1e-10)

    def test_quadratic_form_hand_computation(self):
        rng = np.random.default_rng(3)
        prec = np.linalg.inv(SPEC_CORR.cov)
        _, logdet = np.linalg.slogdet(SPEC_CORR.cov)
        for _ in range(20):
            x = rng.normal(size=2)
            th = rng.normal(size=2)
            r = x - th
            expected = -0.5 * r @ prec @ r - math.log(2.0 * math.pi) - 0.5 * logdet
            got = gaussian_loglik(SPEC_CORR, Observation(*x), ThetaPoint(*th))
            assert got == pytest.approx(expected, abs=1e-12)


class TestGaussianProfile:
    def test_identity_cov_closed_form(self):
        assert gaussian_profile_t(SPEC_I, Observation(2.0, 5.0), 0.0) == pytest.approx(4.0, abs=1e-12)
        rng = np.random.default_rng(4)
        for _ in range(20):
            x = Observation(*rng.normal(size=2))
            mu0 = rng.normal()
            assert gaussian_profile_t(SPEC_I, x, mu0) == pytest.approx(
                (x.x1 - mu0) ** 2, abs=1e-10)

    def test_zero_at_mle(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            x = Observation(*rng.normal(size=2, scale=3.0))
            assert gaussian_profile_t(SPEC_CORR, x, x.x1) == pytest.approx(0.0, abs=1e-12)

    def test_matches_numeric_profiling_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            x = Observation(*rng.normal(size=2, scale=2.0))
            mu0 = rng.uniform(-3, 3)
            got = gaussian_profile_t(SPEC_CORR, x, mu0)
            want = gaussian_profile_oracle(SPEC_CORR, x, mu0)
            assert got == pytest.approx(want, abs=1e-6)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(100, 2))
        mu0 = rng.uniform(-2, 2, size=100)
        vec = gaussian_profile_t_n(SPEC_CORR, x, mu0)
        for i in range(100):
            assert vec[i] == pytest.approx(
                gaussian_profile_t(SPEC_CORR, Observation(*x[i]), mu0[i]), abs=1e-12)

    def test_null_distribution_is_exactly_chi2(self):
        rng = np.random.default_rng(8)
        thetas = np.column_stack([rng.uniform(-5, 5, 100_000),
                                  rng.uniform(-5, 5, 100_000)])
        z = rng.standard_normal((100_000, 2))
        draws = thetas + z @ np.linalg.cholesky(SPEC_CORR.cov).T
        t = gaussian_profile_t_n(SPEC_CORR, draws, thetas[:, 0])
        assert ks_statistic(t, chi2_cdf) <= 0.01


class TestPoissonDraw:
    def test_zero_rate(self):
        rng = np.random.default_rng(0)
        assert all(poisson_draw(0.0, rng) == 0 for _ in range(100))

    def test_moments(self):
        rng = np.random.default_rng(1)
        for lam in (0.5, 15.0, 85.0):
            draws = np.array([poisson_draw(lam, rng) for _ in range(100_000)])
            assert abs(draws.mean() - lam) < 4.0 * math.sqrt(lam / 100_000)
            assert abs(draws.var() / draws.mean() - 1.0) < 0.05

    def test_seed_determinism(self):
        a = [poisson_draw(7.5, np.random.default_rng(9)) for _ in range(5)]
        b = [poisson_draw(7.5, np.random.default_rng(9)) for _ in range(5)]
        assert a == b

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            poisson_draw(-1.0, np.random.default_rng(0))


class TestOnOffSampler:
    def test_nominal_rates(self):
        rng = np.random.default_rng(2)
        model = OnOffModel(SPEC_ONOFF)
        draws = model.sample_n(ThetaPoint(1.0, 1.0), 100_000, rng)
        for col, lam in ((0, 85.0), (1, 70.0)):
            assert abs(draws[:, col].mean() - lam) < 4.0 * math.sqrt(lam / 100_000)

    def test_zero_rates_always_zero(self):
        rng = np.random.default_rng(3)
        x = onoff_sample(SPEC_ONOFF, ThetaPoint(0.0, 0.0), rng)
        assert (x.x1, x.x2) == (0.0, 0.0)

    def test_seed_determinism(self):
        a = onoff_sample(SPEC_ONOFF, ThetaPoint(1.0, 1.0), np.random.default_rng(4))
        b = onoff_sample(SPEC_ONOFF, ThetaPoint(1.0, 1.0), np.random.default_rng(4))
        assert a == b

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            onoff_sample(SPEC_ONOFF, ThetaPoint(-10.0, 0.5), np.random.default_rng(0))


class TestOnOffLoglik:
    def test_zero_counts(self):
        th = ThetaPoint(1.0, 1.0)
        lam1 = th.mu * SPEC_ONOFF.s + th.nu * SPEC_ONOFF.b
        lam2 = th.nu * SPEC_ONOFF.tau * SPEC_ONOFF.b
        got = onoff_loglik(SPEC_ONOFF, Observation(0.0, 0.0), th)
        assert got == pytest.approx(-(lam1 + lam2), abs=1e-12)

    def test_matches_scipy_logpmf(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            th = ThetaPoint(rng.uniform(-0.5, 2.5), rng.uniform(0.5, 1.5))
            lam1 = th.mu * SPEC_ONOFF.s + th.nu * SPEC_ONOFF.b
            lam2 = th.nu * SPEC_ONOFF.tau * SPEC_ONOFF.b
            x = Observation(float(rng.poisson(max(lam1, 0.0))),
                            float(rng.poisson(lam2)))
            expected = poisson.logpmf(x.x1, lam1) + poisson.logpmf(x.x2, lam2)
            assert onoff_loglik(SPEC_ONOFF, x, th) == pytest.approx(expected, abs=1e-10)

    def test_pmf_recurrence(self):
        th = ThetaPoint(0.7, 1.2)
        lam1 = th.mu * SPEC_ONOFF.s + th.nu * SPEC_ONOFF.b
        base = onoff_loglik(SPEC_ONOFF, Observation(80.0, 90.0), th)
        bumped = onoff_loglik(SPEC_ONOFF, Observation(81.0, 90.0), th)
        assert bumped - base == pytest.approx(math.log(lam1) - math.log(81.0), abs=1e-10)

    def test_impossible_observation_sentinel(self):
        got = onoff_loglik(SPEC_ONOFF, Observation(3.0, 0.0), ThetaPoint(0.0, 0.0))
        assert got == -1e300

    def test_non_integral_rejected(self):
        with pytest.raises(ValueError):
            onoff_loglik(SPEC_ONOFF, Observation(1.5, 2.0), ThetaPoint(1.0, 1.0))


class TestOnOffProfile:
    def test_zero_at_mle(self):
        x = Observation(85.0, 70.0)
        mle = onoff_mle(SPEC_ONOFF, x)
        assert mle == ThetaPoint(1.0, 1.0)
        assert onoff_profile_t(SPEC_ONOFF, x, mle.mu) == pytest.approx(0.0, abs=1e-9)

    def test_background_only_null_vs_grid_oracle(self):
        got = onoff_profile_t(SPEC_ONOFF, Observation(85.0, 70.0), 0.0)
        want = onoff_profile_oracle(SPEC_ONOFF, Observation(85.0, 70.0), 0.0)
        assert got == pytest.approx(want, abs=1e-6)
        assert got > 1.0  # a 15-count excess on sqrt(85) noise is visible

    def test_random_cases_vs_grid_oracle(self):
        rng = np.random.default_rng(6)
        model = OnOffModel(SPEC_ONOFF)
        for _ in range(40):
            th = ThetaPoint(rng.uniform(-0.8, 2.5), rng.uniform(0.5, 1.5))
            x = model.sample(th, rng)
            mu0 = rng.uniform(-1.0, 3.0)
            got = onoff_profile_t(SPEC_ONOFF, x, mu0)
            want = onoff_profile_oracle(SPEC_ONOFF, x, mu0)
            assert got == pytest.approx(want, abs=1e-6)

    def test_nonnegative_on_random_cases(self):
        rng = np.random.default_rng(7)
        model = OnOffModel(SPEC_ONOFF)
        thetas = np.column_stack([rng.uniform(-0.8, 2.5, 10_000),
                                  rng.uniform(0.5, 1.5, 10_000)])
        x = model.sample_each(thetas, rng)
        mu0 = rng.uniform(-1.0, 3.0, size=10_000)
        t = onoff_profile_t_n(SPEC_ONOFF, x, mu0)
        assert (t >= -1e-9).all()

    def test_wilks_alignment_over_prior(self):
        # At a single fixed theta0 the count discreteness alone puts an
        # exact floor of ~0.032 under the KS distance, so the asymptotic
        # alignment is checked on the prior-averaged null distribution
        # (mu0 varying smooths the discrete support).
        rng = np.random.default_rng(8)
        mu0 = rng.uniform(-1.0, 3.0, 100_000)
        nu0 = rng.uniform(0.5, 1.5, 100_000)
        rates = np.column_stack([mu0 * SPEC_ONOFF.s + nu0 * SPEC_ONOFF.b,
                                 nu0 * SPEC_ONOFF.tau * SPEC_ONOFF.b])
        x = rng.poisson(rates).astype(float)
        t = onoff_profile_t_n(SPEC_ONOFF, x, mu0)
        assert ks_statistic(t, chi2_cdf) <= 0.02


class TestModelInterface:
    def test_feature_scaling(self):
        g = GaussianModel(SPEC_CORR)
        loc, scale = g.feature_location_scale()
        assert np.array_equal(loc, np.zeros(2)) and np.array_equal(scale, np.ones(2))
        o = OnOffModel(SPEC_ONOFF)
        loc, scale = o.feature_location_scale()
        np.testing.assert_allclose(loc, [85.0, 70.0])
        np.testing.assert_allclose(scale, [math.sqrt(85.0), math.sqrt(70.0)])

    def test_theta_validity(self):
        o = OnOffModel(SPEC_ONOFF)
        assert o.theta_valid(ThetaPoint(1.0, 1.0))
        assert not o.theta_valid(ThetaPoint(-10.0, 0.5))
        mask = o.theta_valid_mask(np.array([[1.0, 1.0], [-10.0, 0.5]]))
        assert mask.tolist() == [True, False]

    def test_observation_validity(self):
        o = OnOffModel(SPEC_ONOFF)
        assert o.observation_valid(Observation(3.0, 0.0))
        assert not o.observation_valid(Observation(-1.0, 0.0))
        assert not o.observation_valid(Observation(1.5, 0.0))
