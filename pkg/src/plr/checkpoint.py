"""Checkpoint files: trained parameters plus everything needed to score.

JSON with explicit shape metadata and full-precision decimal floats, so a
checkpoint round-trips bit-exactly and stays human-inspectable and
language-portable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nn import NetworkParams
from .sampling import Standardizer

FORMAT_VERSION = "1"


@dataclass(frozen=True)
class Checkpoint:
    params: NetworkParams
    standardizer: Standardizer
    config: dict
    config_hash: str
    train_hash: str
    model_tag: str
    seed: int
    trained_steps: int


def _params_to_json(params: NetworkParams) -> dict:
    return {
        "layer_dims": params.layer_dims,
        "hidden_activation": params.hidden_activation,
        "output_activation": params.output_activation,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }


def _params_from_json(obj: dict) -> NetworkParams:
    weights = tuple(np.asarray(w, dtype=float) for w in obj["weights"])
    biases = tuple(np.asarray(b, dtype=float) for b in obj["biases"])
    params = NetworkParams(weights=weights, biases=biases,
                           hidden_activation=obj["hidden_activation"],
                           output_activation=obj["output_activation"])
    if params.layer_dims != list(obj["layer_dims"]):
        raise ValueError("checkpoint layer_dims do not match stored arrays")
    return params


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "config_hash": ckpt.config_hash,
        "train_hash": ckpt.train_hash,
        "model": ckpt.model_tag,
        "seed": ckpt.seed,
        "trained_steps": ckpt.trained_steps,
        "standardizer": {"offset": ckpt.standardizer.offset.tolist(),
                         "scale": ckpt.standardizer.scale.tolist()},
        "network": _params_to_json(ckpt.params),
        "config": ckpt.config,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n",
                          encoding="utf-8")


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read checkpoint {path}: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format_version {version!r} "
                         f"(expected {FORMAT_VERSION!r})")
    std = Standardizer(offset=np.asarray(doc["standardizer"]["offset"], dtype=float),
                       scale=np.asarray(doc["standardizer"]["scale"], dtype=float))
    return Checkpoint(params=_params_from_json(doc["network"]),
                      standardizer=std,
                      config=doc["config"],
                      config_hash=doc["config_hash"],
                      train_hash=doc["train_hash"],
                      model_tag=doc["model"],
                      seed=int(doc["seed"]),
                      trained_steps=int(doc["trained_steps"]))
