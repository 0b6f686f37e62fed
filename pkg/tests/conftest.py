"""Shared fixtures: tiny run configurations and a prebuilt pipeline run."""

import json

import pytest


def tiny_gaussian_config(seed=11, **overrides):
    cfg = {
        "seed": seed,
        "output_dir": "out",
        "model": {"kind": "gaussian"},
        "prior": {"mu": [-2.0, 2.0], "nu": [-2.0, 2.0], "d": [0.3, 2.0]},
        "train": {"learning_rate": 0.002, "batch_size": 128, "steps": 400,
                  "hidden_dims": [16], "eval_every": 100},
        "eval": {"eval_mu": [0.0], "n_calibration": 1200, "n_eval": 2000,
                 "n_null": 3000, "mu_grid": {"min": -1.5, "max": 1.5, "points": 21},
                 "roc_pairs": [{"mu0": 0.0, "offset": 1.0}]},
    }
    cfg.update(overrides)
    return cfg


def tiny_onoff_config(seed=13, **overrides):
    cfg = {
        "seed": seed,
        "output_dir": "out",
        "model": {"kind": "onoff", "s": 15.0, "b": 70.0, "tau": 1.0},
        "prior": {"mu": [-1.0, 3.0], "nu": [0.5, 1.5], "d": [0.3, 2.0]},
        "train": {"learning_rate": 0.002, "batch_size": 128, "steps": 200,
                  "hidden_dims": [16], "eval_every": 100},
        "eval": {"eval_mu": [1.0], "n_calibration": 1500, "n_eval": 1500,
                 "n_null": 2000, "mu_grid": {"min": -0.5, "max": 2.5, "points": 11},
                 "roc_pairs": [{"mu0": 1.0, "offset": 1.0}],
                 "method": "percentile"},
    }
    cfg.update(overrides)
    return cfg


def write_config(path, cfg) -> str:
    path.write_text(json.dumps(cfg, indent=1), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="module")
def gaussian_run(tmp_path_factory):
    """One tiny Gaussian pipeline run shared by read-only CLI tests."""
    from plr.cli import main

    root = tmp_path_factory.mktemp("gauss_run")
    out = root / "out"
    cfg = tiny_gaussian_config(output_dir=str(out))
    cfg_path = write_config(root / "config.json", cfg)
    assert main(["train", "--config", cfg_path]) == 0
    assert main(["calibrate", "--config", cfg_path]) == 0
    assert main(["evaluate", "--config", cfg_path]) == 0
    assert main(["scan", "--config", cfg_path, "--x-obs", "0.8,-0.2"]) == 0
    return {"root": root, "out": out, "config_path": cfg_path, "config": cfg}
