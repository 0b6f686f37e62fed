"""Command-line pipeline: train, calibrate, evaluate, scan.

Every artifact is a pure function of (config file, seed): each subcommand
derives its own random stream from the run seed, so commands can be re-run
independently and calibration/evaluation never reuse training or each
other's draws. Exit codes: 0 success, 2 configuration or consistency error,
3 numeric abort during training (a last-good checkpoint is written).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .calibration import (CalibrationMap, CalibrationSet, chi2_cdf, isotonic_fit,
                          load_calibration, percentile_match_fit, save_calibration)
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, load_config
from .evaluation import ks_statistic, power_at_size, profile_scan, roc_curve
from .models import Model, Observation, ThetaPoint
from .sampling import make_standardizer, sample_eval_set, sample_null_observations
from .training import TrainingDiverged, score_batch, train

_STREAM = {"train": 0, "calibrate": 1, "evaluate": 2, "scan": 3}


def _rng_for(command: str, seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_STREAM[command],)))


def _write_csv(path: Path, header: list[str], rows, meta: dict | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if meta:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else repr(float(v)) for v in row])


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_matching_checkpoint(path: Path, cfg: RunConfig) -> Checkpoint:
    ckpt = load_checkpoint(path)
    if ckpt.train_hash != cfg.train_hash:
        raise ConfigError(f"checkpoint/config mismatch: checkpoint {path} was produced "
                          f"with train-section hash {ckpt.train_hash}, current is "
                          f"{cfg.train_hash} (seed/model/prior/train must match)")
    return ckpt


def _nu_ref(cfg: RunConfig) -> float:
    lo, hi = cfg.prior.nu_range
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
    out = _out_dir(cfg)
    model = cfg.make_model()
    rng = _rng_for("train", cfg.seed)
    ckpt_path = out / "checkpoint.json"
    try:
        params, log = train(model, cfg.train, rng)
    except TrainingDiverged as exc:
        last = Checkpoint(params=exc.last_good_params,
                          standardizer=make_standardizer(model, cfg.prior),
                          config=cfg.effective, config_hash=cfg.config_hash,
                          train_hash=cfg.train_hash, model_tag=cfg.model_tag,
                          seed=cfg.seed, trained_steps=exc.step)
        save_checkpoint(last, out / "checkpoint_lastgood.json")
        print(f"error: {exc} (last-good checkpoint written to "
              f"{out / 'checkpoint_lastgood.json'})", file=sys.stderr)
        return 3
    ckpt = Checkpoint(params=params, standardizer=make_standardizer(model, cfg.prior),
                      config=cfg.effective, config_hash=cfg.config_hash,
                      train_hash=cfg.train_hash, model_tag=cfg.model_tag,
                      seed=cfg.seed, trained_steps=cfg.train.steps)
    save_checkpoint(ckpt, ckpt_path)
    _write_csv(out / "trainlog.csv", ["step", "loss", "seconds"],
               [(r.step, r.loss, r.seconds) for r in log.records],
               meta={"config": cfg.config_hash})
    if not args.no_figures:
        from . import figures
        figures.save_trainlog_figure(out / "trainlog.png",
                                     [r.step for r in log.records],
                                     [r.loss for r in log.records])
    print(f"wrote {ckpt_path} and {out / 'trainlog.csv'} "
          f"(final loss {log.final_loss:.4f})")
    return 0


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------

def _fit_calibration_at(model: Model, cfg: RunConfig, ckpt: Checkpoint, mu0: float,
                        method: str, rng: np.random.Generator) -> CalibrationMap:
    n = cfg.eval.n_calibration
    if method == "isotonic":
        x, _ = sample_eval_set(model, cfg.prior, mu0, n, rng)
        s = score_batch(ckpt.params, x, mu0, ckpt.standardizer)
        t = model.profile_t_n(x, mu0)
        fit = isotonic_fit(np.column_stack([s, t]))
    else:
        x = sample_null_observations(model, cfg.prior, mu0, n, rng)
        s = score_batch(ckpt.params, x, mu0, ckpt.standardizer)
        fit = percentile_match_fit(s)
    return CalibrationMap(knots_s=fit.knots_s, knots_t=fit.knots_t,
                          method=fit.method, n_fit=fit.n_fit, mu0=mu0)


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
    out = _out_dir(cfg)
    method = args.method or cfg.eval.method
    if method not in ("isotonic", "percentile"):
        raise ConfigError(f"unknown calibration method {method!r} "
                          "(expected isotonic or percentile)")
    ckpt = _load_matching_checkpoint(Path(args.checkpoint or out / "checkpoint.json"), cfg)
    model = cfg.make_model()
    rng = _rng_for("calibrate", cfg.seed)
    mus = cfg.eval.calibration_mus()
    paths = []
    for mu0 in mus:
        cmap = _fit_calibration_at(model, cfg, ckpt, float(mu0), method, rng)
        path = out / f"calibration_mu{mu0:g}.csv"
        save_calibration(cmap, path, extra_meta={"config": cfg.config_hash,
                                                 "train": cfg.train_hash})
        paths.append(path)
    if not args.no_figures:
        from . import figures
        shown = [load_calibration(p) for p in
                 (paths if len(paths) <= 6 else
                  [paths[i] for i in np.linspace(0, len(paths) - 1, 6).astype(int)])]
        figures.save_calibration_figure(
            out / "calibration.png",
            [(m.mu0, m.knots_s, m.knots_t) for m in shown],
            title=f"calibration maps ({method})")
    print(f"wrote {len(paths)} calibration maps to {out} (method {method})")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _load_calibration_set(args, cfg: RunConfig, out: Path) -> CalibrationSet:
    where = Path(args.calibration) if args.calibration else out
    if where.is_file():
        cal = CalibrationSet([load_calibration(where)])
        maps = [cal.joint] if cal.joint is not None else cal.maps
    else:
        cal = CalibrationSet.load_dir(where)
        maps = cal.maps
    for m in maps:
        got = m.meta.get("train")
        if got is not None and got != cfg.train_hash:
            raise ConfigError(f"checkpoint/config mismatch: calibration map was produced "
                              f"with train-section hash {got}, current is {cfg.train_hash}")
    return cal


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
    out = _out_dir(cfg)
    ckpt = _load_matching_checkpoint(Path(args.checkpoint or out / "checkpoint.json"), cfg)
    cal = _load_calibration_set(args, cfg, out)
    model = cfg.make_model()
    rng = _rng_for("evaluate", cfg.seed)
    from scipy.stats import spearmanr

    # ROC and power for each configured (theta0, theta_alt) pair.
    pair_metrics = []
    headline_curves = None
    for pair in cfg.eval.roc_pairs:
        nu0 = pair.nu0 if pair.nu0 is not None else _nu_ref(cfg)
        theta0 = ThetaPoint(pair.mu0, nu0)
        theta_alt = ThetaPoint(pair.mu0 + pair.offset, nu0)
        x_null = model.sample_n(theta0, cfg.eval.n_eval, rng)
        x_alt = model.sample_n(theta_alt, cfg.eval.n_eval, rng)
        s_null = score_batch(ckpt.params, x_null, pair.mu0, ckpt.standardizer)
        s_alt = score_batch(ckpt.params, x_alt, pair.mu0, ckpt.standardizer)
        t_null = model.profile_t_n(x_null, pair.mu0)
        t_alt = model.profile_t_n(x_alt, pair.mu0)
        roc_l = roc_curve(s_null, s_alt)
        roc_o = roc_curve(t_null, t_alt)
        pair_metrics.append({
            "mu0": pair.mu0, "offset": pair.offset, "nu0": nu0,
            "auc_learned": roc_l.auc, "auc_oracle": roc_o.auc,
            "power_learned": {repr(a): power_at_size(s_null, s_alt, a)
                              for a in cfg.eval.alpha_list},
            "power_oracle": {repr(a): power_at_size(t_null, t_alt, a)
                             for a in cfg.eval.alpha_list},
        })
        if headline_curves is None:
            headline_curves = (roc_l, roc_o)

    # Rank agreement between the raw statistic and the oracle per tested mu0.
    spearman_by_mu = {}
    for mu0 in cfg.eval.eval_mu:
        x, _ = sample_eval_set(model, cfg.prior, float(mu0), cfg.eval.n_eval, rng)
        s = score_batch(ckpt.params, x, float(mu0), ckpt.standardizer)
        t = model.profile_t_n(x, float(mu0))
        rho = float(spearmanr(s, t).statistic)
        spearman_by_mu[repr(float(mu0))] = rho

    # Null distribution of the calibrated statistic vs chi2(1).
    mu0_null = cfg.eval.roc_pairs[0].mu0
    x_n = sample_null_observations(model, cfg.prior, mu0_null, cfg.eval.n_null, rng)
    s_n = score_batch(ckpt.params, x_n, mu0_null, ckpt.standardizer)
    t_cal = np.sort(np.asarray(cal.apply(mu0_null, s_n), dtype=float))
    ecdf = np.arange(1, t_cal.size + 1) / t_cal.size
    ref = chi2_cdf(t_cal)
    ks_null = ks_statistic(t_cal, chi2_cdf)

    roc_l, roc_o = headline_curves
    _write_csv(out / "roc.csv", ["alpha", "beta", "threshold"],
               zip(roc_l.alpha, roc_l.beta, roc_l.thresholds),
               meta={"config": cfg.config_hash, "statistic": "learned"})
    _write_csv(out / "roc_oracle.csv", ["alpha", "beta", "threshold"],
               zip(roc_o.alpha, roc_o.beta, roc_o.thresholds),
               meta={"config": cfg.config_hash, "statistic": "oracle"})
    _write_csv(out / "nulldist.csv", ["value", "ecdf", "chi2cdf"],
               zip(t_cal, ecdf, ref),
               meta={"config": cfg.config_hash, "mu0": repr(float(mu0_null))})
    metrics = {
        "config_hash": cfg.config_hash,
        "model": cfg.model_tag,
        "auc_learned": pair_metrics[0]["auc_learned"],
        "auc_oracle": pair_metrics[0]["auc_oracle"],
        "spearman": min(spearman_by_mu.values()),
        "ks_null": ks_null,
        "spearman_by_mu": spearman_by_mu,
        "pairs": pair_metrics,
        "n_eval": cfg.eval.n_eval,
        "n_null": cfg.eval.n_null,
    }
    (out / "metrics.json").write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n",
                                      encoding="utf-8")
    if not args.no_figures:
        from . import figures
        figures.save_roc_figure(out / "roc.png",
                                [("learned", roc_l.alpha, roc_l.beta),
                                 ("oracle", roc_o.alpha, roc_o.beta)])
        figures.save_nulldist_figure(out / "nulldist.png", t_cal, ecdf, ref)
    print(f"wrote roc.csv, roc_oracle.csv, nulldist.csv, metrics.json to {out} "
          f"(auc {roc_l.auc:.4f} vs {roc_o.auc:.4f}, ks_null {ks_null:.4f})")
    return 0


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def _parse_x_obs(text: str, model: Model) -> Observation:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"--x-obs must be two comma-separated numbers, got {text!r}")
    try:
        x = Observation(float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise ConfigError(f"--x-obs must be numeric, got {text!r}") from exc
    if not model.observation_valid(x):
        raise ConfigError(f"observation {text!r} is invalid for model {model.name!r}")
    return x


def cmd_scan(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
    out = _out_dir(cfg)
    ckpt = _load_matching_checkpoint(Path(args.checkpoint or out / "checkpoint.json"), cfg)
    cal = _load_calibration_set(args, cfg, out)
    model = cfg.make_model()
    x_obs = _parse_x_obs(args.x_obs, model)
    grid = cfg.eval.grid_points()
    curve = profile_scan(ckpt.params, cal, model, x_obs, grid, ckpt.standardizer,
                         mu_domain=cfg.prior.mu_range)
    meta = {"config": cfg.config_hash, "x_obs": args.x_obs}
    for i, note in enumerate(curve.notes):
        meta[f"warning{i}"] = note.replace(" ", "_")
    _write_csv(out / "scan.csv", ["mu", "learned", "oracle"],
               zip(curve.mu, curve.learned, curve.oracle), meta=meta)
    if not args.no_figures:
        from . import figures
        figures.save_scan_figure(out / "scan.png", curve.mu, curve.learned, curve.oracle)
    argmin = curve.mu[int(np.argmin(curve.learned))]
    print(f"wrote scan.csv to {out} (learned argmin {argmin:g})")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plr",
        description="Learn, calibrate and evaluate a best-average-power test "
                    "statistic against exact profile-likelihood-ratio oracles.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--no-figures", action="store_true",
                       help="skip rendering PNG figures next to the CSV output")

    p_train = sub.add_parser("train", help="run the training loop, write a checkpoint")
    common(p_train)

    p_cal = sub.add_parser("calibrate", help="fit per-mu0 calibration maps")
    common(p_cal)
    p_cal.add_argument("--checkpoint", default=None, help="checkpoint path "
                       "(default: <out>/checkpoint.json)")
    p_cal.add_argument("--method", choices=["isotonic", "percentile"], default=None,
                       help="calibration route (default: from config)")

    p_eval = sub.add_parser("evaluate", help="ROC, null-distribution and rank metrics")
    common(p_eval)
    p_eval.add_argument("--checkpoint", default=None)
    p_eval.add_argument("--calibration", default=None,
                        help="calibration file or directory (default: <out>)")

    p_scan = sub.add_parser("scan", help="profile the statistic over a mu grid")
    common(p_scan)
    p_scan.add_argument("--checkpoint", default=None)
    p_scan.add_argument("--calibration", default=None)
    p_scan.add_argument("--x-obs", required=True, dest="x_obs",
                        help="observation as 'x1,x2'")

    return parser


_COMMANDS = {"train": cmd_train, "calibrate": cmd_calibrate,
             "evaluate": cmd_evaluate, "scan": cmd_scan}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
