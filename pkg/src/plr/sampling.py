"""Null/alternative proposal sampling and minibatch assembly.

A hypothesis draw consists of a null point theta0 = (mu0, nu0) from a
uniform prior box and two alternatives (mu0 +/- d, nu0) sharing the null's
nuisance value, with the offset d uniform on a positive range. Minibatches
are balanced: half the rows come from the null (label 0), a quarter from
each alternative (label 1), and every row carries the null's mu0 as its
third feature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import Model, ThetaPoint

_MAX_RESAMPLE = 100
_SHRINK_BISECTIONS = 60


@dataclass(frozen=True)
class PriorSpec:
    """Uniform prior box over (mu, nu) plus the offset range for |mu - mu0|."""

    mu_range: tuple[float, float]
    nu_range: tuple[float, float]
    d_range: tuple[float, float]

    def __post_init__(self) -> None:
        for name in ("mu_range", "nu_range", "d_range"):
            lo, hi = getattr(self, name)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"{name} must satisfy low < high, got ({lo}, {hi})")
        if self.d_range[0] <= 0:
            raise ValueError(f"d_range must be entirely positive, got {self.d_range}")


@dataclass(frozen=True)
class HypothesisDraw:
    theta0: ThetaPoint
    alternatives: tuple[ThetaPoint, ThetaPoint]
    d: float


@dataclass(frozen=True)
class LabeledBatch:
    features: np.ndarray  # (n, 3) standardized rows (x1, x2, mu0)
    labels: np.ndarray    # (n,) in {0, 1}
    mu0: float


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine map (v - offset) / scale; invertible by construction."""

    offset: np.ndarray
    scale: np.ndarray

    def __post_init__(self) -> None:
        off = np.asarray(self.offset, dtype=float)
        sc = np.asarray(self.scale, dtype=float)
        if off.shape != (3,) or sc.shape != (3,):
            raise ValueError("offset and scale must have shape (3,)")
        if not (np.isfinite(off).all() and np.isfinite(sc).all() and (sc > 0).all()):
            raise ValueError("scale entries must be finite and positive")
        object.__setattr__(self, "offset", off)
        object.__setattr__(self, "scale", sc)

    def transform(self, raw: np.ndarray) -> np.ndarray:
        return (np.asarray(raw, dtype=float) - self.offset) / self.scale

    def inverse(self, std: np.ndarray) -> np.ndarray:
        return np.asarray(std, dtype=float) * self.scale + self.offset


def make_standardizer(model: Model, prior: PriorSpec) -> Standardizer:
    """Model-derived location/scale for x, prior midpoint/half-width for mu0."""
    loc, scale = model.feature_location_scale()
    mu_lo, mu_hi = prior.mu_range
    offset = np.append(loc, 0.5 * (mu_lo + mu_hi))
    sc = np.append(scale, 0.5 * (mu_hi - mu_lo))
    return Standardizer(offset=offset, scale=sc)


def sample_null(prior: PriorSpec, rng: np.random.Generator) -> ThetaPoint:
    """Independent uniforms over the prior box."""
    mu = rng.uniform(*prior.mu_range)
    nu = rng.uniform(*prior.nu_range)
    return ThetaPoint(float(mu), float(nu))


def _alternatives(theta0: ThetaPoint, d: float) -> tuple[ThetaPoint, ThetaPoint]:
    return (ThetaPoint(theta0.mu + d, theta0.nu),
            ThetaPoint(theta0.mu - d, theta0.nu))


def sample_alternatives(theta0: ThetaPoint, prior: PriorSpec, rng: np.random.Generator,
                        is_valid: Callable[[ThetaPoint], bool] | None = None,
                        ) -> HypothesisDraw:
    """Uniform offset d with both alternatives sharing the null's nuisance value.

    If a validity predicate rejects an alternative (e.g. a negative Poisson
    rate), d is redrawn up to 100 times and then shrunk to the validity
    boundary by bisection.
    """
    lo, hi = prior.d_range
    d = float(rng.uniform(lo, hi))
    if is_valid is None:
        return HypothesisDraw(theta0, _alternatives(theta0, d), d)

    def ok(offset: float) -> bool:
        a, b = _alternatives(theta0, offset)
        return is_valid(a) and is_valid(b)

    for _ in range(_MAX_RESAMPLE):
        if ok(d):
            return HypothesisDraw(theta0, _alternatives(theta0, d), d)
        d = float(rng.uniform(lo, hi))
    # Persistent rejection: shrink toward zero offset, which is valid because
    # theta0 itself is (both alternatives coincide with the null there).
    good, bad = 0.0, d
    for _ in range(_SHRINK_BISECTIONS):
        mid = 0.5 * (good + bad)
        if ok(mid):
            good = mid
        else:
            bad = mid
    return HypothesisDraw(theta0, _alternatives(theta0, good), good)


def assemble_minibatch(model: Model, draw: HypothesisDraw, n: int,
                       rng: np.random.Generator,
                       standardizer: Standardizer) -> LabeledBatch:
    """n/2 null rows labeled 0, n/4 rows per alternative labeled 1."""
    if n < 4 or n % 4 != 0:
        raise ValueError(f"batch size must be >= 4 and divisible by 4, got {n}")
    n_null = n // 2
    n_alt = n // 4
    blocks = [model.sample_n(draw.theta0, n_null, rng),
              model.sample_n(draw.alternatives[0], n_alt, rng),
              model.sample_n(draw.alternatives[1], n_alt, rng)]
    x = np.vstack(blocks)
    mu0 = draw.theta0.mu
    raw = np.column_stack([x, np.full(n, mu0)])
    labels = np.concatenate([np.zeros(n_null), np.ones(2 * n_alt)])
    return LabeledBatch(features=standardizer.transform(raw), labels=labels, mu0=mu0)


def sample_eval_set(model: Model, prior: PriorSpec, mu0: float, n: int,
                    rng: np.random.Generator,
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Held-out observations at a fixed mu0, mixing null and alternative draws.

    Returns (observations (n, 2), labels (n,)). Null rows use per-draw
    nuisance values from the prior; alternative rows additionally draw the
    offset per row, reusing the training-time validity handling.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    n_null = n // 2
    nu_lo, nu_hi = prior.nu_range
    nus = rng.uniform(nu_lo, nu_hi, size=n_null)
    thetas0 = np.column_stack([np.full(n_null, mu0), nus])
    x_null = model.sample_each(thetas0, rng)

    # Vectorized alternative proposal; rows whose offset fails the validity
    # check fall back to the scalar resample-then-shrink path.
    n_alt = n - n_null
    alt_nus = rng.uniform(nu_lo, nu_hi, size=n_alt)
    ds = rng.uniform(*prior.d_range, size=n_alt)
    sides = np.where(rng.integers(0, 2, size=n_alt) == 0, 1.0, -1.0)
    alt_thetas = np.column_stack([mu0 + sides * ds, alt_nus])
    both = np.column_stack([mu0 + ds, alt_nus, mu0 - ds, alt_nus])
    valid = (model.theta_valid_mask(both[:, :2]) & model.theta_valid_mask(both[:, 2:]))
    for i in np.flatnonzero(~valid):
        theta0 = ThetaPoint(mu0, float(alt_nus[i]))
        draw = sample_alternatives(theta0, prior, rng, is_valid=model.theta_valid)
        alt_thetas[i] = draw.alternatives[0 if sides[i] > 0 else 1]
    x_alt = model.sample_each(alt_thetas, rng)

    x = np.vstack([x_null, x_alt])
    labels = np.concatenate([np.zeros(n_null), np.ones(n_alt)])
    return x, labels


def sample_null_observations(model: Model, prior: PriorSpec, mu0: float, n: int,
                             rng: np.random.Generator) -> np.ndarray:
    """n observations from the null at mu0 with per-draw nuisance values."""
    nu_lo, nu_hi = prior.nu_range
    nus = rng.uniform(nu_lo, nu_hi, size=n)
    thetas = np.column_stack([np.full(n, mu0), nus])
    return model.sample_each(thetas, rng)
