"""Diagnostics: ROC curves, power at fixed size, KS checks, profile scans.

Everything here works from Monte Carlo samples of a statistic, never from
assumed distributional forms, so the same code path serves the learned
statistic and the exact oracles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calibration import CalibrationSet
from .models import Model, Observation
from .nn import NetworkParams
from .sampling import Standardizer
from .training import score_batch

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class ROCCurve:
    """False-positive vs true-positive rates swept over score thresholds."""

    alpha: np.ndarray
    beta: np.ndarray
    thresholds: np.ndarray
    auc: float

    def __post_init__(self) -> None:
        if (np.diff(self.alpha) < 0).any() or (np.diff(self.beta) < 0).any():
            raise ValueError("ROC points must be sorted with nondecreasing rates")
        if not (self.alpha[0] == 0 and self.beta[0] == 0
                and self.alpha[-1] == 1 and self.beta[-1] == 1):
            raise ValueError("ROC must span (0,0) to (1,1)")
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"AUC out of range: {self.auc}")


@dataclass(frozen=True)
class ScanCurve:
    """Learned and oracle statistic values over a grid of tested mu0."""

    mu: np.ndarray
    learned: np.ndarray
    oracle: np.ndarray | None = None
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.learned.shape != self.mu.shape:
            raise ValueError("learned values must match the grid length")
        if self.oracle is not None and self.oracle.shape != self.mu.shape:
            raise ValueError("oracle values must match the grid length")


def roc_curve(scores_null, scores_alt) -> ROCCurve:
    """Threshold sweep over the merged distinct score values.

    alpha(v) is the fraction of null scores above v, beta(v) the fraction of
    alternative scores above v; the rejection region is score > threshold.
    AUC is the trapezoid-rule area, which equals the pairwise-comparison
    (Mann-Whitney) statistic with ties counted one-half.
    """
    null = np.sort(np.asarray(scores_null, dtype=float))
    alt = np.sort(np.asarray(scores_alt, dtype=float))
    if null.size == 0 or alt.size == 0:
        raise ValueError("both score lists must be nonempty")
    values = np.unique(np.concatenate([null, alt]))[::-1]  # descending
    alpha = 1.0 - np.searchsorted(null, values, side="right") / null.size
    beta = 1.0 - np.searchsorted(alt, values, side="right") / alt.size
    alpha = np.append(alpha, 1.0)
    beta = np.append(beta, 1.0)
    thresholds = np.append(values, -np.inf)
    auc = float(_trapezoid(beta, alpha))
    return ROCCurve(alpha=alpha, beta=beta, thresholds=thresholds, auc=auc)


def power_at_size(scores_null, scores_alt, alpha: float) -> float:
    """Power at test size alpha using the empirical null quantile threshold.

    The threshold is the linearly interpolated (1 - alpha) order-statistic
    quantile of the null scores; power is the fraction of alternative scores
    strictly above it. All-equal inputs trigger a degeneracy warning.
    """
    null = np.asarray(scores_null, dtype=float)
    alt = np.asarray(scores_alt, dtype=float)
    if null.size == 0 or alt.size == 0:
        raise ValueError("both score lists must be nonempty")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if np.ptp(null) == 0 and np.ptp(alt) == 0 and null[0] == alt[0]:
        warnings.warn("all scores are identical; power is degenerate",
                      RuntimeWarning, stacklevel=2)
    threshold = float(np.quantile(null, 1.0 - alpha))
    return float(np.mean(alt > threshold))


def ks_statistic(samples, cdf: Callable) -> float:
    """Sup-norm distance between the empirical CDF and a reference CDF.

    Both one-sided gaps are evaluated at the sample points; the lower gap
    uses the reference value just below each point so a reference that
    itself jumps at the samples (e.g. the ECDF of the same data) measures
    zero.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("samples must be nonempty")

    def eval_cdf(points):
        try:
            f = np.asarray(cdf(points), dtype=float)
            if f.shape != points.shape:
                raise TypeError
            return f
        except (TypeError, ValueError):
            return np.array([float(cdf(v)) for v in points])

    f_at = eval_cdf(x)
    f_below = eval_cdf(np.nextafter(x, -np.inf))
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f_at)
    d_minus = np.max(f_below - (i - 1) / n)
    return float(max(d_plus, d_minus, 0.0))


def profile_scan(params: NetworkParams, calib: CalibrationSet, model: Model,
                 x_obs: Observation, mu_grid, standardizer: Standardizer,
                 mu_domain: tuple[float, float] | None = None) -> ScanCurve:
    """Calibrated learned statistic and oracle over a grid of tested mu0.

    ``mu_domain`` is the mu range the network was trained on; grid points
    outside it are still evaluated but flagged in the curve's notes.
    """
    grid = np.asarray(mu_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("mu_grid must be a nonempty 1-d array")
    x_arr = np.asarray(x_obs, dtype=float)[None, :]
    learned = np.empty(grid.size)
    oracle = np.empty(grid.size)
    notes: list[str] = []
    for i, mu0 in enumerate(grid):
        s = score_batch(params, x_arr, float(mu0), standardizer)[0]
        learned[i] = float(calib.apply(float(mu0), s))
        oracle[i] = model.profile_t(Observation(*x_arr[0]), float(mu0))
    if mu_domain is not None:
        lo, hi = mu_domain
        outside = (grid < lo) | (grid > hi)
        if outside.any():
            msg = (f"{int(outside.sum())} grid points outside the trained "
                   f"mu range [{lo}, {hi}]")
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
    return ScanCurve(mu=grid, learned=learned, oracle=oracle, notes=tuple(notes))
