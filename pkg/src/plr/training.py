"""The training loop that fits the parametrized test statistic.

Each step samples a fresh null point, a fresh pair of equidistant
alternatives, and a balanced labeled minibatch; the mean binary
cross-entropy is minimized with Adam. The result is deterministic given the
configuration and generator seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .models import Model, Observation
from .nn import (AdamState, NetworkParams, adam_step, forward, forward_batch,
                 init_params, loss_and_grad)
from .sampling import (PriorSpec, Standardizer, assemble_minibatch,
                       make_standardizer, sample_alternatives, sample_null)


@dataclass(frozen=True)
class TrainConfig:
    prior: PriorSpec
    learning_rate: float = 5e-5
    batch_size: int = 1000
    steps: int = 20000
    hidden_dims: tuple[int, ...] = (100, 100, 100)
    seed: int = 0
    eval_every: int = 500
    model_tag: str = ""

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.batch_size < 4 or self.batch_size % 4 != 0:
            raise ValueError("batch_size must be divisible by 4 and >= 4, "
                             f"got {self.batch_size}")
        if not self.hidden_dims or any(d < 1 for d in self.hidden_dims):
            raise ValueError(f"hidden_dims must be nonempty positive, got {self.hidden_dims}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, got {self.eval_every}")


@dataclass(frozen=True)
class TrainRecord:
    step: int
    loss: float
    seconds: float


@dataclass
class TrainingLog:
    records: list[TrainRecord] = field(default_factory=list)
    final_loss: float = float("nan")

    def add(self, step: int, loss: float, seconds: float) -> None:
        if self.records and step <= self.records[-1].step:
            raise ValueError("log steps must be strictly increasing")
        self.records.append(TrainRecord(step, float(loss), float(seconds)))


class TrainingDiverged(RuntimeError):
    """Non-finite loss or parameters; carries the last good state."""

    def __init__(self, step: int, params: NetworkParams, log: TrainingLog,
                 detail: str):
        super().__init__(f"training diverged at step {step}: {detail}")
        self.step = step
        self.last_good_params = params
        self.log = log


def build_features(x: Observation | np.ndarray, mu0: float,
                   standardizer: Standardizer) -> np.ndarray:
    """Standardized (x1, x2, mu0) feature vector for a single observation."""
    xv = np.asarray(x, dtype=float)
    if xv.shape != (2,):
        raise ValueError(f"expected an observation of two values, got shape {xv.shape}")
    raw = np.append(xv, float(mu0))
    if not np.isfinite(raw).all():
        raise ValueError(f"non-finite inputs: {raw}")
    return standardizer.transform(raw)


def score(params: NetworkParams, x: Observation | np.ndarray, mu0: float,
          standardizer: Standardizer) -> float:
    """Evaluate the trained statistic on one observation, in (0, 1)."""
    return forward(params, build_features(x, mu0, standardizer))


def score_batch(params: NetworkParams, x: np.ndarray, mu0: float,
                standardizer: Standardizer) -> np.ndarray:
    """Vectorized scoring of (n, 2) observations at a shared mu0."""
    x = np.asarray(x, dtype=float)
    raw = np.column_stack([x, np.full(x.shape[0], float(mu0))])
    return forward_batch(params, standardizer.transform(raw))


def train(model: Model, config: TrainConfig,
          rng: np.random.Generator) -> tuple[NetworkParams, TrainingLog]:
    """Run the full SGD loop and return the trained parameters and a log.

    Per step: sample the null, sample the alternatives, assemble a labeled
    minibatch, take one Adam step on the mean BXE. The log records the
    first-batch loss at step 0 and windowed mean losses every
    ``eval_every`` steps. Raises :class:`TrainingDiverged` on non-finite
    loss or parameters.
    """
    if config.model_tag and config.model_tag != model.name:
        raise ValueError(f"config is for model {config.model_tag!r}, got {model.name!r}")
    standardizer = make_standardizer(model, config.prior)
    dims = [3, *config.hidden_dims, 1]
    params = init_params(rng, dims)
    state = AdamState.zero(params)
    log = TrainingLog()
    t_start = time.perf_counter()
    window: list[float] = []

    for step in range(config.steps):
        theta0 = sample_null(config.prior, rng)
        draw = sample_alternatives(theta0, config.prior, rng,
                                   is_valid=model.theta_valid)
        batch = assemble_minibatch(model, draw, config.batch_size, rng, standardizer)
        try:
            loss, grad = loss_and_grad(params, batch.features, batch.labels)
        except FloatingPointError as exc:
            raise TrainingDiverged(step, params, log, str(exc)) from exc
        if step == 0:
            log.add(0, loss, time.perf_counter() - t_start)
        window.append(loss)
        try:
            # NetworkParams validates finiteness, so a non-finite update
            # surfaces here as a construction error.
            params, state = adam_step(params, grad, state, config.learning_rate)
        except ValueError as exc:
            raise TrainingDiverged(step, params, log,
                                   f"update produced invalid parameters: {exc}") from exc
        if (step + 1) % config.eval_every == 0:
            log.add(step + 1, float(np.mean(window)), time.perf_counter() - t_start)
            window = []

    log.final_loss = log.records[-1].loss
    return params, log
