"""Run configuration: strict JSON schema, defaults, and content hashing.

Unknown keys are rejected (a typo must never be silently ignored) and every
validation error is anchored to the config file line where the offending key
appears. The effective configuration, with all defaults materialized and any
command-line overrides applied, is what gets hashed and echoed into
artifacts for pipeline consistency checks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models import (GaussianModel, GaussianModelSpec, Model, OnOffModel,
                     OnOffModelSpec)
from .sampling import PriorSpec
from .training import TrainConfig


class ConfigError(ValueError):
    """Invalid run configuration; the message carries file/line context."""


DEFAULT_COV = ((1.0, 0.8), (0.8, 1.0))
DEFAULT_PRIORS = {
    "gaussian": {"mu": (-5.0, 5.0), "nu": (-5.0, 5.0), "d": (1e-3, 3.0)},
    "onoff": {"mu": (-1.0, 3.0), "nu": (0.5, 1.5), "d": (1e-3, 2.0)},
}

_TOP_KEYS = {"seed", "output_dir", "model", "prior", "train", "eval"}
_MODEL_KEYS = {"gaussian": {"kind", "cov"}, "onoff": {"kind", "s", "b", "tau"}}
_PRIOR_KEYS = {"mu", "nu", "d"}
_TRAIN_KEYS = {"learning_rate", "batch_size", "steps", "hidden_dims", "eval_every"}
_EVAL_KEYS = {"eval_mu", "n_calibration", "n_eval", "n_null", "alpha_list",
              "mu_grid", "calib_mu", "roc_pairs", "method"}
_GRID_KEYS = {"min", "max", "points"}
_PAIR_KEYS = {"mu0", "offset", "nu0"}


@dataclass(frozen=True)
class RocPairSpec:
    mu0: float
    offset: float
    nu0: float | None = None


@dataclass(frozen=True)
class EvalConfig:
    eval_mu: tuple[float, ...]
    n_calibration: int
    n_eval: int
    n_null: int
    alpha_list: tuple[float, ...]
    mu_grid: tuple[float, float, int]  # (min, max, points)
    calib_mu: tuple[float, ...] | None
    roc_pairs: tuple[RocPairSpec, ...]
    method: str

    def grid_points(self) -> np.ndarray:
        lo, hi, n = self.mu_grid
        return np.linspace(lo, hi, n)

    def calibration_mus(self) -> np.ndarray:
        if self.calib_mu is not None:
            return np.asarray(self.calib_mu, dtype=float)
        return self.grid_points()


@dataclass(frozen=True)
class RunConfig:
    seed: int
    output_dir: str
    model_tag: str
    prior: PriorSpec
    train: TrainConfig
    eval: EvalConfig
    effective: dict
    config_hash: str   # digest of the full effective config (traceability)
    train_hash: str    # digest of what the checkpoint depends on (consistency)
    _model_section: dict = None  # type: ignore[assignment]

    def make_model(self) -> Model:
        if self.model_tag == "gaussian":
            return GaussianModel(GaussianModelSpec(np.asarray(self._model_section["cov"])))
        return OnOffModel(OnOffModelSpec(s=self._model_section["s"],
                                         b=self._model_section["b"],
                                         tau=self._model_section["tau"]))


class _Anchored:
    """Maps dotted key paths to the line of their key in the raw text."""

    def __init__(self, text: str, path: str):
        self.lines = text.splitlines()
        self.path = path

    def line_of(self, key: str) -> int | None:
        needle = f'"{key.rsplit(".", 1)[-1]}"'
        for i, line in enumerate(self.lines, start=1):
            if needle in line:
                return i
        return None

    def fail(self, key: str, message: str) -> "ConfigError":
        line = self.line_of(key)
        where = f"{self.path}:{line}" if line else self.path
        return ConfigError(f"{where}: {key}: {message}")


def _reject_unknown(section: dict, allowed: set[str], prefix: str,
                    anchor: _Anchored) -> None:
    for key in section:
        if key not in allowed:
            raise anchor.fail(f"{prefix}{key}", "unknown key")


def _number(section: dict, key: str, prefix: str, anchor: _Anchored,
            default=None, required: bool = False) -> float:
    if key not in section:
        if required:
            raise anchor.fail(f"{prefix}{key}", "missing required key")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise anchor.fail(f"{prefix}{key}", f"expected a number, got {v!r}")
    return v


def _pair(section: dict, key: str, prefix: str, anchor: _Anchored, default):
    if key not in section:
        return tuple(default)
    v = section[key]
    if (not isinstance(v, list) or len(v) != 2
            or not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in v)):
        raise anchor.fail(f"{prefix}{key}", f"expected [low, high], got {v!r}")
    return (float(v[0]), float(v[1]))


def _float_list(section: dict, key: str, prefix: str, anchor: _Anchored, default):
    if key not in section:
        return default
    v = section[key]
    if (not isinstance(v, list) or not v
            or not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in v)):
        raise anchor.fail(f"{prefix}{key}", f"expected a nonempty number list, got {v!r}")
    return tuple(float(e) for e in v)


def load_config(path: str | Path, seed_override: int | None = None,
                out_override: str | None = None) -> RunConfig:
    """Parse, validate and resolve a JSON run configuration."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    anchor = _Anchored(text, str(path))
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "", anchor)

    # --- seed / output dir ---------------------------------------------
    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        raise anchor.fail("seed", "missing required key (or pass --seed)")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise anchor.fail("seed", f"expected an integer, got {seed!r}")
    output_dir = out_override if out_override is not None else raw.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise anchor.fail("output_dir", "expected a string")

    # --- model ----------------------------------------------------------
    model_raw = raw.get("model")
    if not isinstance(model_raw, dict):
        raise anchor.fail("model", "missing or invalid model section")
    kind = model_raw.get("kind")
    if kind not in _MODEL_KEYS:
        raise anchor.fail("model.kind", f"expected 'gaussian' or 'onoff', got {kind!r}")
    _reject_unknown(model_raw, _MODEL_KEYS[kind], "model.", anchor)
    if kind == "gaussian":
        cov = model_raw.get("cov", [list(r) for r in DEFAULT_COV])
        try:
            spec_model = {"kind": kind, "cov": [[float(c) for c in row] for row in cov]}
            GaussianModelSpec(np.asarray(spec_model["cov"], dtype=float))
        except (TypeError, ValueError) as exc:
            raise anchor.fail("model.cov", str(exc)) from exc
    else:
        s = _number(model_raw, "s", "model.", anchor, default=15.0)
        b = _number(model_raw, "b", "model.", anchor, default=70.0)
        tau = _number(model_raw, "tau", "model.", anchor, default=1.0)
        try:
            OnOffModelSpec(s=s, b=b, tau=tau)
        except ValueError as exc:
            raise anchor.fail("model", str(exc)) from exc
        spec_model = {"kind": kind, "s": s, "b": b, "tau": tau}

    # --- prior -----------------------------------------------------------
    prior_raw = raw.get("prior", {})
    if not isinstance(prior_raw, dict):
        raise anchor.fail("prior", "expected an object")
    _reject_unknown(prior_raw, _PRIOR_KEYS, "prior.", anchor)
    defaults = DEFAULT_PRIORS[kind]
    mu_range = _pair(prior_raw, "mu", "prior.", anchor, defaults["mu"])
    nu_range = _pair(prior_raw, "nu", "prior.", anchor, defaults["nu"])
    d_range = _pair(prior_raw, "d", "prior.", anchor, defaults["d"])
    try:
        prior = PriorSpec(mu_range=mu_range, nu_range=nu_range, d_range=d_range)
    except ValueError as exc:
        raise anchor.fail("prior", str(exc)) from exc

    # --- train -----------------------------------------------------------
    train_raw = raw.get("train", {})
    if not isinstance(train_raw, dict):
        raise anchor.fail("train", "expected an object")
    _reject_unknown(train_raw, _TRAIN_KEYS, "train.", anchor)
    hidden = train_raw.get("hidden_dims", [100, 100, 100])
    if (not isinstance(hidden, list) or not hidden
            or not all(isinstance(h, int) and not isinstance(h, bool) and h > 0
                       for h in hidden)):
        raise anchor.fail("train.hidden_dims", f"expected positive integers, got {hidden!r}")
    try:
        train_cfg = TrainConfig(
            prior=prior,
            learning_rate=float(_number(train_raw, "learning_rate", "train.", anchor,
                                        default=5e-5)),
            batch_size=int(_number(train_raw, "batch_size", "train.", anchor,
                                   default=1000)),
            steps=int(_number(train_raw, "steps", "train.", anchor, default=20000)),
            hidden_dims=tuple(hidden),
            seed=seed,
            eval_every=int(_number(train_raw, "eval_every", "train.", anchor,
                                   default=500)),
            model_tag=kind,
        )
    except ValueError as exc:
        key = "train.batch_size" if "batch_size" in str(exc) else "train"
        raise anchor.fail(key, str(exc)) from exc

    # --- eval --------------------------------------------------------------
    eval_raw = raw.get("eval", {})
    if not isinstance(eval_raw, dict):
        raise anchor.fail("eval", "expected an object")
    _reject_unknown(eval_raw, _EVAL_KEYS, "eval.", anchor)
    default_eval_mu = (-1.0, 0.0, 1.0) if kind == "gaussian" else (0.0, 1.0, 2.0)
    eval_mu = _float_list(eval_raw, "eval_mu", "eval.", anchor, default_eval_mu)
    grid_raw = eval_raw.get("mu_grid", {})
    if not isinstance(grid_raw, dict):
        raise anchor.fail("eval.mu_grid", "expected an object {min, max, points}")
    _reject_unknown(grid_raw, _GRID_KEYS, "eval.mu_grid.", anchor)
    g_lo = _number(grid_raw, "min", "eval.mu_grid.", anchor, default=mu_range[0])
    g_hi = _number(grid_raw, "max", "eval.mu_grid.", anchor, default=mu_range[1])
    g_n = int(_number(grid_raw, "points", "eval.mu_grid.", anchor, default=101))
    if not (g_lo < g_hi and g_n >= 2):
        raise anchor.fail("eval.mu_grid", f"need min < max and points >= 2, "
                                          f"got ({g_lo}, {g_hi}, {g_n})")
    pairs_raw = eval_raw.get("roc_pairs", [{"mu0": default_eval_mu[1], "offset": 1.0}])
    if not isinstance(pairs_raw, list) or not pairs_raw:
        raise anchor.fail("eval.roc_pairs", "expected a nonempty list of objects")
    pairs = []
    for entry in pairs_raw:
        if not isinstance(entry, dict):
            raise anchor.fail("eval.roc_pairs", f"expected objects, got {entry!r}")
        _reject_unknown(entry, _PAIR_KEYS, "eval.roc_pairs.", anchor)
        mu0 = _number(entry, "mu0", "eval.roc_pairs.", anchor, required=True)
        offset = _number(entry, "offset", "eval.roc_pairs.", anchor, required=True)
        nu0 = entry.get("nu0")
        if nu0 is not None:
            nu0 = _number(entry, "nu0", "eval.roc_pairs.", anchor)
        pairs.append(RocPairSpec(mu0=float(mu0), offset=float(offset),
                                 nu0=None if nu0 is None else float(nu0)))
    method = eval_raw.get("method", "isotonic")
    if method not in ("isotonic", "percentile"):
        raise anchor.fail("eval.method", f"expected 'isotonic' or 'percentile', got {method!r}")
    calib_mu = _float_list(eval_raw, "calib_mu", "eval.", anchor, None)
    eval_cfg = EvalConfig(
        eval_mu=eval_mu,
        n_calibration=int(_number(eval_raw, "n_calibration", "eval.", anchor, default=5000)),
        n_eval=int(_number(eval_raw, "n_eval", "eval.", anchor, default=20000)),
        n_null=int(_number(eval_raw, "n_null", "eval.", anchor, default=100000)),
        alpha_list=_float_list(eval_raw, "alpha_list", "eval.", anchor,
                               (0.01, 0.05, 0.1, 0.2)),
        mu_grid=(float(g_lo), float(g_hi), g_n),
        calib_mu=calib_mu,
        roc_pairs=tuple(pairs),
        method=method,
    )
    for name, n in (("n_calibration", eval_cfg.n_calibration),
                    ("n_eval", eval_cfg.n_eval), ("n_null", eval_cfg.n_null)):
        if n < 10:
            raise anchor.fail(f"eval.{name}", f"too small ({n})")
    if any(not 0.0 < a < 1.0 for a in eval_cfg.alpha_list):
        raise anchor.fail("eval.alpha_list", "entries must be in (0, 1)")

    effective = {
        "seed": seed,
        "output_dir": output_dir,
        "model": spec_model,
        "prior": {"mu": list(mu_range), "nu": list(nu_range), "d": list(d_range)},
        "train": {"learning_rate": train_cfg.learning_rate,
                  "batch_size": train_cfg.batch_size,
                  "steps": train_cfg.steps,
                  "hidden_dims": list(train_cfg.hidden_dims),
                  "eval_every": train_cfg.eval_every},
        "eval": {"eval_mu": list(eval_cfg.eval_mu),
                 "n_calibration": eval_cfg.n_calibration,
                 "n_eval": eval_cfg.n_eval,
                 "n_null": eval_cfg.n_null,
                 "alpha_list": list(eval_cfg.alpha_list),
                 "mu_grid": {"min": eval_cfg.mu_grid[0], "max": eval_cfg.mu_grid[1],
                             "points": eval_cfg.mu_grid[2]},
                 "calib_mu": None if calib_mu is None else list(calib_mu),
                 "roc_pairs": [{"mu0": p.mu0, "offset": p.offset, "nu0": p.nu0}
                               for p in pairs],
                 "method": method},
    }
    train_part = {k: effective[k] for k in ("seed", "model", "prior", "train")}
    return RunConfig(seed=seed, output_dir=output_dir, model_tag=kind, prior=prior,
                     train=train_cfg, eval=eval_cfg, effective=effective,
                     config_hash=hash_config(effective),
                     train_hash=hash_config(train_part), _model_section=spec_model)


def hash_config(effective: dict) -> str:
    """Content digest of a configuration dict."""
    canonical = json.dumps(effective, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
