"""The two benchmark models: samplers, exact log-likelihoods, profile-LR oracles.

Both models have one parameter of interest (mu) and one nuisance parameter
(nu). The profile statistic is the two-sided

    t(x; mu0) = -2 [ sup_nu log L(mu0, nu) - sup_{mu,nu} log L(mu, nu) ]

computed from analytic maximizers in both cases. A log-likelihood of -inf
(zero Poisson rate with a nonzero count) is represented by a large negative
sentinel so that profiling arithmetic stays total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

LOG_ZERO = -1e300
LOG_2PI = math.log(2.0 * math.pi)
# Roundoff guard for t values: tiny negatives are clipped to zero, anything
# more negative is a bug and propagates so the nonnegativity tests can see it.
_T_ROUNDOFF = 1e-9


class ThetaPoint(NamedTuple):
    mu: float
    nu: float


class Observation(NamedTuple):
    x1: float
    x2: float


@dataclass(frozen=True)
class GaussianModelSpec:
    """Bivariate normal with mean (mu, nu) and fixed covariance."""

    cov: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.cov, dtype=float)
        if c.shape != (2, 2):
            raise ValueError(f"covariance must be 2x2, got {c.shape}")
        if not np.allclose(c, c.T):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(c)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not positive definite") from exc
        object.__setattr__(self, "cov", c)


@dataclass(frozen=True)
class OnOffModelSpec:
    """Two Poisson measurements: x1 ~ Pois(mu*s + nu*b), x2 ~ Pois(nu*tau*b)."""

    s: float
    b: float
    tau: float

    def __post_init__(self) -> None:
        for name in ("s", "b", "tau"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")


# ---------------------------------------------------------------------------
# Gaussian model
# ---------------------------------------------------------------------------

def _chol(spec: GaussianModelSpec) -> np.ndarray:
    return np.linalg.cholesky(spec.cov)


def gaussian_sample(spec: GaussianModelSpec, theta: ThetaPoint,
                    rng: np.random.Generator) -> Observation:
    """Draw x = theta + L z with L the Cholesky factor of the covariance."""
    z = rng.standard_normal(2)
    x = np.asarray(theta, dtype=float) + _chol(spec) @ z
    return Observation(float(x[0]), float(x[1]))


def gaussian_sample_n(spec: GaussianModelSpec, theta: ThetaPoint, n: int,
                      rng: np.random.Generator) -> np.ndarray:
    """n independent draws at a single parameter point, shape (n, 2)."""
    z = rng.standard_normal((n, 2))
    return np.asarray(theta, dtype=float) + z @ _chol(spec).T


def gaussian_sample_each(spec: GaussianModelSpec, thetas: np.ndarray,
                         rng: np.random.Generator) -> np.ndarray:
    """One draw per row of a (n, 2) array of parameter points."""
    thetas = np.asarray(thetas, dtype=float)
    z = rng.standard_normal(thetas.shape)
    return thetas + z @ _chol(spec).T


def gaussian_loglik(spec: GaussianModelSpec, x: Observation, theta: ThetaPoint) -> float:
    """Exact bivariate normal log density."""
    r = np.asarray(x, dtype=float) - np.asarray(theta, dtype=float)
    prec = np.linalg.inv(spec.cov)
    _, logdet = np.linalg.slogdet(spec.cov)
    return float(-0.5 * r @ prec @ r - LOG_2PI - 0.5 * logdet)


def _clip_t(t) -> float | np.ndarray:
    if np.ndim(t) == 0:
        tf = float(t)
        return 0.0 if -_T_ROUNDOFF < tf < 0.0 else tf
    t = np.asarray(t, dtype=float)
    return np.where((t > -_T_ROUNDOFF) & (t < 0.0), 0.0, t)


def gaussian_profile_t(spec: GaussianModelSpec, x: Observation, mu0: float) -> float:
    """Profile statistic at mu0; the global MLE is theta = x.

    The conditional maximizer over nu at fixed mu0 is the regression value
    nuhh = x2 - (cov12/cov11) (x1 - mu0).
    """
    return float(gaussian_profile_t_n(spec, np.asarray(x, dtype=float)[None, :], mu0)[0])


def gaussian_profile_t_n(spec: GaussianModelSpec, x: np.ndarray, mu0) -> np.ndarray:
    """Vectorized profile statistic; x is (n, 2), mu0 scalar or (n,)."""
    x = np.asarray(x, dtype=float)
    mu0 = np.asarray(mu0, dtype=float)
    c = spec.cov
    prec = np.linalg.inv(c)
    r1 = x[:, 0] - mu0
    r2 = r1 * (c[0, 1] / c[0, 0])  # residual in x2 at the conditional maximizer
    quad = prec[0, 0] * r1 * r1 + 2.0 * prec[0, 1] * r1 * r2 + prec[1, 1] * r2 * r2
    return np.asarray(_clip_t(quad), dtype=float)


# ---------------------------------------------------------------------------
# On-off model
# ---------------------------------------------------------------------------

def poisson_draw(lam: float, rng: np.random.Generator) -> int:
    """One Poisson count; valid for rates well beyond 1e4."""
    if not np.isfinite(lam) or lam < 0:
        raise ValueError(f"rate must be finite and >= 0, got {lam}")
    return int(rng.poisson(lam))


def _rates(spec: OnOffModelSpec, theta: ThetaPoint) -> tuple[float, float]:
    return theta.mu * spec.s + theta.nu * spec.b, theta.nu * spec.tau * spec.b


def onoff_theta_valid(spec: OnOffModelSpec, theta: ThetaPoint) -> bool:
    lam1, lam2 = _rates(spec, theta)
    return lam1 >= 0 and lam2 >= 0


def onoff_sample(spec: OnOffModelSpec, theta: ThetaPoint,
                 rng: np.random.Generator) -> Observation:
    """Independent Poisson draws at the two rates implied by theta."""
    lam1, lam2 = _rates(spec, theta)
    if lam1 < 0 or lam2 < 0:
        raise ValueError(f"negative Poisson rate for theta {tuple(theta)}: "
                         f"({lam1}, {lam2})")
    return Observation(float(rng.poisson(lam1)), float(rng.poisson(lam2)))


def onoff_sample_n(spec: OnOffModelSpec, theta: ThetaPoint, n: int,
                   rng: np.random.Generator) -> np.ndarray:
    lam1, lam2 = _rates(spec, theta)
    if lam1 < 0 or lam2 < 0:
        raise ValueError(f"negative Poisson rate for theta {tuple(theta)}")
    return rng.poisson((lam1, lam2), size=(n, 2)).astype(float)


def onoff_sample_each(spec: OnOffModelSpec, thetas: np.ndarray,
                      rng: np.random.Generator) -> np.ndarray:
    thetas = np.asarray(thetas, dtype=float)
    rates = np.column_stack([thetas[:, 0] * spec.s + thetas[:, 1] * spec.b,
                             thetas[:, 1] * spec.tau * spec.b])
    if (rates < 0).any():
        raise ValueError("negative Poisson rate among parameter points")
    return rng.poisson(rates).astype(float)


def _pois_logpmf(k: float, lam: float) -> float:
    """log Pois(k | lam) with the 0*log(0) = 0 convention."""
    if lam == 0.0:
        return 0.0 if k == 0 else LOG_ZERO
    return k * math.log(lam) - lam - math.lgamma(k + 1.0)


def _pois_logpmf_vec(k: np.ndarray, lam: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln

    k = np.asarray(k, dtype=float)
    lam = np.asarray(lam, dtype=float)
    safe = np.maximum(lam, 1e-300)
    out = k * np.log(safe) - lam - gammaln(k + 1.0)
    zero_rate = lam == 0.0
    return np.where(zero_rate, np.where(k == 0.0, 0.0, LOG_ZERO), out)


def onoff_loglik(spec: OnOffModelSpec, x: Observation, theta: ThetaPoint) -> float:
    """Sum of the two Poisson log-pmfs; LOG_ZERO sentinel for impossible x."""
    x1, x2 = float(x.x1), float(x.x2)
    if x1 < 0 or x2 < 0 or x1 != int(x1) or x2 != int(x2):
        raise ValueError(f"on-off observations must be nonnegative integers, got {tuple(x)}")
    lam1, lam2 = _rates(spec, theta)
    if lam1 < 0 or lam2 < 0:
        raise ValueError(f"negative Poisson rate for theta {tuple(theta)}")
    ll = _pois_logpmf(x1, lam1) + _pois_logpmf(x2, lam2)
    return max(ll, LOG_ZERO)


def onoff_mle(spec: OnOffModelSpec, x: Observation) -> ThetaPoint:
    """Global maximizer: nu = x2/(tau b), mu = (x1 - nu b)/s (mu unbounded below)."""
    nu_hat = float(x.x2) / (spec.tau * spec.b)
    mu_hat = (float(x.x1) - nu_hat * spec.b) / spec.s
    return ThetaPoint(mu_hat, nu_hat)


def onoff_profile_t(spec: OnOffModelSpec, x: Observation, mu0: float) -> float:
    """Profile statistic at mu0 for the on-off model.

    The conditional maximizer over nu solves a quadratic stationarity
    condition; candidate roots are clipped to the feasible region
    nu >= max(0, -mu0 s / b) and the best candidate wins.
    """
    return float(onoff_profile_t_n(spec, np.asarray(x, dtype=float)[None, :], mu0)[0])


def onoff_profile_t_n(spec: OnOffModelSpec, x: np.ndarray, mu0) -> np.ndarray:
    """Vectorized profile statistic; x is (n, 2) of counts, mu0 scalar or (n,)."""
    x = np.asarray(x, dtype=float)
    if (x < 0).any() or (x != np.round(x)).any():
        raise ValueError("on-off observations must be nonnegative integers")
    x1, x2 = x[:, 0], x[:, 1]
    mu0 = np.broadcast_to(np.asarray(mu0, dtype=float), x1.shape)
    s, b, tau = spec.s, spec.b, spec.tau

    # Saturated fit: the global MLE reproduces the observed counts exactly.
    sat = _pois_logpmf_vec(x1, x1) + _pois_logpmf_vec(x2, x2)

    # Stationarity of the conditional log-likelihood in nu is a quadratic:
    #   (1+tau) b^2 nu^2 - b q nu - x2 mu0 s = 0,  q = x1 + x2 - (1+tau) mu0 s.
    q = x1 + x2 - (1.0 + tau) * mu0 * s
    disc = q * q + 4.0 * (1.0 + tau) * x2 * mu0 * s
    root = np.sqrt(np.maximum(disc, 0.0))
    denom = 2.0 * (1.0 + tau) * b
    nu_lo = np.maximum(0.0, -mu0 * s / b)
    candidates = [np.maximum((q + root) / denom, nu_lo),
                  np.maximum((q - root) / denom, nu_lo),
                  nu_lo]

    best = np.full_like(x1, LOG_ZERO)
    for nu in candidates:
        # Clipping nu to nu_lo keeps both rates >= 0 up to roundoff.
        lam1 = np.maximum(mu0 * s + nu * b, 0.0)
        lam2 = np.maximum(nu * tau * b, 0.0)
        ll = _pois_logpmf_vec(x1, lam1) + _pois_logpmf_vec(x2, lam2)
        best = np.maximum(best, ll)

    return np.asarray(_clip_t(-2.0 * (best - sat)), dtype=float)


# ---------------------------------------------------------------------------
# Uniform model interface used by sampling / training / evaluation
# ---------------------------------------------------------------------------

class GaussianModel:
    """Bivariate Gaussian with free mean and fixed covariance."""

    name = "gaussian"

    def __init__(self, spec: GaussianModelSpec):
        self.spec = spec

    def sample(self, theta: ThetaPoint, rng: np.random.Generator) -> Observation:
        return gaussian_sample(self.spec, theta, rng)

    def sample_n(self, theta: ThetaPoint, n: int, rng: np.random.Generator) -> np.ndarray:
        return gaussian_sample_n(self.spec, theta, n, rng)

    def sample_each(self, thetas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return gaussian_sample_each(self.spec, thetas, rng)

    def loglik(self, x: Observation, theta: ThetaPoint) -> float:
        return gaussian_loglik(self.spec, x, theta)

    def profile_t(self, x: Observation, mu0: float) -> float:
        return gaussian_profile_t(self.spec, x, mu0)

    def profile_t_n(self, x: np.ndarray, mu0) -> np.ndarray:
        return gaussian_profile_t_n(self.spec, x, mu0)

    def mle(self, x: Observation) -> ThetaPoint:
        return ThetaPoint(float(x.x1), float(x.x2))

    def theta_valid(self, theta: ThetaPoint) -> bool:
        return bool(np.isfinite(theta.mu) and np.isfinite(theta.nu))

    def theta_valid_mask(self, thetas: np.ndarray) -> np.ndarray:
        return np.isfinite(np.asarray(thetas, dtype=float)).all(axis=1)

    def observation_valid(self, x: Observation) -> bool:
        return bool(np.isfinite(x.x1) and np.isfinite(x.x2))

    def feature_location_scale(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(2), np.ones(2)


class OnOffModel:
    """Two Poisson processes with shared background scale nu."""

    name = "onoff"

    def __init__(self, spec: OnOffModelSpec):
        self.spec = spec

    def sample(self, theta: ThetaPoint, rng: np.random.Generator) -> Observation:
        return onoff_sample(self.spec, theta, rng)

    def sample_n(self, theta: ThetaPoint, n: int, rng: np.random.Generator) -> np.ndarray:
        return onoff_sample_n(self.spec, theta, n, rng)

    def sample_each(self, thetas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return onoff_sample_each(self.spec, thetas, rng)

    def loglik(self, x: Observation, theta: ThetaPoint) -> float:
        return onoff_loglik(self.spec, x, theta)

    def profile_t(self, x: Observation, mu0: float) -> float:
        return onoff_profile_t(self.spec, x, mu0)

    def profile_t_n(self, x: np.ndarray, mu0) -> np.ndarray:
        return onoff_profile_t_n(self.spec, x, mu0)

    def mle(self, x: Observation) -> ThetaPoint:
        return onoff_mle(self.spec, x)

    def theta_valid(self, theta: ThetaPoint) -> bool:
        return onoff_theta_valid(self.spec, theta)

    def theta_valid_mask(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.asarray(thetas, dtype=float)
        lam1 = thetas[:, 0] * self.spec.s + thetas[:, 1] * self.spec.b
        lam2 = thetas[:, 1] * self.spec.tau * self.spec.b
        return (lam1 >= 0) & (lam2 >= 0)

    def observation_valid(self, x: Observation) -> bool:
        return x.x1 >= 0 and x.x2 >= 0 and x.x1 == int(x.x1) and x.x2 == int(x.x2)

    def feature_location_scale(self) -> tuple[np.ndarray, np.ndarray]:
        nominal = np.array([self.spec.s + self.spec.b, self.spec.tau * self.spec.b])
        return nominal, np.sqrt(nominal)


Model = GaussianModel | OnOffModel
