"""Monotone calibration of raw classifier scores into profile-LR units.

Two routes are supported: isotonic regression on (score, t) pairs where an
exact t is available, and percentile matching of null-hypothesis scores onto
the chi-squared distribution with one degree of freedom. Both produce a
:class:`CalibrationMap`, a piecewise-linear monotone nondecreasing function
that clamps outside its knot range.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class CalibrationMap:
    """Piecewise-linear map from raw score s to t units.

    Knot abscissae are strictly increasing, ordinates nondecreasing;
    evaluation clamps to the end values outside the knot range.
    """

    knots_s: np.ndarray
    knots_t: np.ndarray
    method: str = "isotonic"
    n_fit: int = 0
    mu0: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        s = np.asarray(self.knots_s, dtype=float)
        t = np.asarray(self.knots_t, dtype=float)
        if s.ndim != 1 or s.shape != t.shape or s.size < 1:
            raise ValueError("knots must be two equal-length 1-d arrays")
        if not (np.isfinite(s).all() and np.isfinite(t).all()):
            raise ValueError("knots contain non-finite values")
        if s.size > 1 and not (np.diff(s) > 0).all():
            raise ValueError("knot scores must be strictly increasing")
        if s.size > 1 and (np.diff(t) < 0).any():
            raise ValueError("knot t values must be nondecreasing")
        object.__setattr__(self, "knots_s", s)
        object.__setattr__(self, "knots_t", t)

    def apply(self, s) -> np.ndarray:
        return np.interp(s, self.knots_s, self.knots_t)


def apply_calibration(cmap: CalibrationMap, s: float) -> float:
    """Evaluate the map at a single score."""
    return float(cmap.apply(s))


def _dedup_flat_runs(s: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop interior knots of constant-t runs; the interpolant is unchanged."""
    if s.size <= 2:
        return s, t
    keep = np.ones(s.size, dtype=bool)
    keep[1:-1] = (t[1:-1] != t[:-2]) | (t[1:-1] != t[2:])
    return s[keep], t[keep]


def _pava(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted least-squares fit under a nondecreasing constraint.

    Classic pool-adjacent-violators with a block stack; O(n).
    """
    n = y.size
    means = np.empty(n)
    weights = np.empty(n)
    length = np.empty(n, dtype=int)
    top = -1
    for i in range(n):
        top += 1
        means[top] = y[i]
        weights[top] = w[i]
        length[top] = 1
        while top > 0 and means[top - 1] > means[top]:
            wsum = weights[top - 1] + weights[top]
            means[top - 1] = (weights[top - 1] * means[top - 1]
                              + weights[top] * means[top]) / wsum
            weights[top - 1] = wsum
            length[top - 1] += length[top]
            top -= 1
    return np.repeat(means[:top + 1], length[:top + 1])


def isotonic_fit(pairs) -> CalibrationMap:
    """Least-squares monotone fit of t against s by pool-adjacent-violators.

    Duplicate s values are averaged before fitting, so the result is a
    function. Requires at least two pairs.
    """
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs,
                     dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError("need at least two (s, t) pairs")
    if not np.isfinite(arr).all():
        raise ValueError("pairs contain non-finite values")
    order = np.argsort(arr[:, 0], kind="stable")
    s_sorted = arr[order, 0]
    t_sorted = arr[order, 1]
    s_unique, start = np.unique(s_sorted, return_index=True)
    if s_unique.size < 2:
        raise ValueError("need at least two distinct s values")
    counts = np.diff(np.append(start, s_sorted.size))
    t_avg = np.add.reduceat(t_sorted, start) / counts
    fitted = _pava(t_avg, counts.astype(float))
    s_k, t_k = _dedup_flat_runs(s_unique, fitted)
    return CalibrationMap(knots_s=s_k, knots_t=t_k, method="isotonic",
                          n_fit=int(arr.shape[0]))


# ---------------------------------------------------------------------------
# Normal and chi-squared(1) quantiles
# ---------------------------------------------------------------------------

# Rational approximation AS 241 (PPND16); |error| well below 1e-9.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, x: float) -> float:
    acc = 0.0
    for c in reversed(coef):
        acc = acc * x + c
    return acc


def norm_quantile(p: float) -> float:
    """Standard normal quantile Phi^{-1}(p) for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        z = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        z = _poly(_E, r) / _poly(_F, r)
    return -z if q < 0 else z


def chi2_quantile(p: float, k: int = 1) -> float:
    """Quantile of the chi-squared distribution with one degree of freedom.

    Uses chi2(1) = Z^2, i.e. q = (Phi^{-1}((1+p)/2))^2.
    """
    if k != 1:
        raise ValueError("only one degree of freedom is supported")
    if not 0.0 <= p < 1.0:
        raise ValueError(f"p must be in [0, 1), got {p}")
    if p == 0.0:
        return 0.0
    z = norm_quantile((1.0 + p) / 2.0)
    return z * z


def chi2_cdf(x) -> np.ndarray | float:
    """CDF of chi-squared with one degree of freedom, erf(sqrt(x/2))."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, np.vectorize(math.erf)(np.sqrt(np.maximum(x, 0.0) / 2.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def percentile_match_fit(null_scores, k: int = 1) -> CalibrationMap:
    """Map empirical null-score quantiles onto chi-squared(1) quantiles.

    The i-th order statistic (plotting position (i+0.5)/N) becomes a knot
    (score_i, chi2_quantile((i+0.5)/N)). Tied scores are pooled onto their
    mean quantile so the map stays a function.
    """
    if k != 1:
        raise ValueError("only one degree of freedom is supported")
    scores = np.sort(np.asarray(null_scores, dtype=float))
    n = scores.size
    if n < 1000:
        raise ValueError(f"need at least 1000 null scores, got {n}")
    if not np.isfinite(scores).all():
        raise ValueError("null scores contain non-finite values")
    q = np.array([chi2_quantile((i + 0.5) / n) for i in range(n)])
    s_unique, start = np.unique(scores, return_index=True)
    counts = np.diff(np.append(start, n))
    q_avg = np.add.reduceat(q, start) / counts
    s_k, t_k = _dedup_flat_runs(s_unique, q_avg)
    return CalibrationMap(knots_s=s_k, knots_t=t_k, method="percentile", n_fit=int(n))


# ---------------------------------------------------------------------------
# Serialization: one CSV per map, a '#'-prefixed metadata line, header s,t
# ---------------------------------------------------------------------------

def save_calibration(cmap: CalibrationMap, path: str | Path,
                     extra_meta: dict | None = None) -> None:
    meta = {"method": cmap.method, "n": str(cmap.n_fit)}
    if cmap.mu0 is not None:
        meta["mu0"] = repr(float(cmap.mu0))
    meta.update({k: str(v) for k, v in (extra_meta or {}).items()})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["s", "t"])
        for s, t in zip(cmap.knots_s, cmap.knots_t):
            writer.writerow([repr(float(s)), repr(float(t))])


def load_calibration(path: str | Path) -> CalibrationMap:
    meta: dict[str, str] = {}
    rows: list[tuple[float, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line.lstrip("# ").split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        meta[key] = val
                continue
            if line == "s,t":
                continue
            a, b = line.split(",")
            rows.append((float(a), float(b)))
    if not rows:
        raise ValueError(f"no knots found in {path}")
    arr = np.asarray(rows)
    mu0 = float(meta["mu0"]) if "mu0" in meta else None
    return CalibrationMap(knots_s=arr[:, 0], knots_t=arr[:, 1],
                          method=meta.get("method", "unknown"),
                          n_fit=int(meta.get("n", 0)), mu0=mu0, meta=meta)


class CalibrationSet:
    """Per-mu0 calibration maps with linear interpolation between panels.

    A single map with ``mu0 is None`` acts as a joint map applied at every
    mu0.
    """

    def __init__(self, maps: list[CalibrationMap]):
        if not maps:
            raise ValueError("empty calibration set")
        if len(maps) == 1 and maps[0].mu0 is None:
            self.joint: CalibrationMap | None = maps[0]
            self.mu0s = np.empty(0)
            self.maps: list[CalibrationMap] = []
            return
        if any(m.mu0 is None for m in maps):
            raise ValueError("per-mu0 set contains a map without a mu0 tag")
        order = np.argsort([m.mu0 for m in maps])
        self.joint = None
        self.maps = [maps[i] for i in order]
        self.mu0s = np.array([m.mu0 for m in self.maps])
        if np.unique(self.mu0s).size != self.mu0s.size:
            raise ValueError("duplicate mu0 values in calibration set")

    @classmethod
    def load_dir(cls, directory: str | Path, pattern: str = "calibration_mu*.csv"
                 ) -> "CalibrationSet":
        paths = sorted(Path(directory).glob(pattern))
        if not paths:
            raise ValueError(f"no calibration files matching {pattern} in {directory}")
        return cls([load_calibration(p) for p in paths])

    def apply(self, mu0: float, s) -> np.ndarray | float:
        """Calibrated value at mu0; interpolates linearly between panels."""
        if self.joint is not None:
            return self.joint.apply(s)
        idx = int(np.searchsorted(self.mu0s, mu0))
        if idx < len(self.mu0s) and self.mu0s[idx] == mu0:
            return self.maps[idx].apply(s)
        if idx == 0:
            return self.maps[0].apply(s)
        if idx == len(self.mu0s):
            return self.maps[-1].apply(s)
        lo, hi = idx - 1, idx
        w = (mu0 - self.mu0s[lo]) / (self.mu0s[hi] - self.mu0s[lo])
        return (1.0 - w) * self.maps[lo].apply(s) + w * self.maps[hi].apply(s)
