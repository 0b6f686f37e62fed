"""Minimal dense feed-forward network with analytic gradients and Adam.

The network family is fixed: tanh hidden layers, a single sigmoid output
unit, all arithmetic in float64. Parameters, gradients and optimizer state
are immutable containers; every operation returns new values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# Probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before any log.
PROB_EPS = 1e-7


@dataclass(frozen=True)
class NetworkParams:
    """Weights and biases of a dense tanh network with sigmoid output.

    ``weights[i]`` has shape (out_i, in_i) and ``biases[i]`` shape (out_i,).
    Adjacent layers chain (out_i == in_{i+1}) and the final layer has a
    single output unit.
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    hidden_activation: str = "tanh"
    output_activation: str = "sigmoid"

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be nonempty and parallel")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: input dim {w.shape[1]} does not chain")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i}: non-finite parameter entries")
        if self.weights[-1].shape[0] != 1:
            raise ValueError("final layer must have a single output unit")
        if self.hidden_activation != "tanh" or self.output_activation != "sigmoid":
            raise ValueError("only the tanh/sigmoid family is supported")

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True)
class Gradient:
    """Per-parameter derivatives, shaped exactly like :class:`NetworkParams`."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class AdamState:
    """First/second moment buffers and step counter for Adam."""

    m_weights: tuple[np.ndarray, ...]
    m_biases: tuple[np.ndarray, ...]
    v_weights: tuple[np.ndarray, ...]
    v_biases: tuple[np.ndarray, ...]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zero(cls, params: NetworkParams, beta1: float = 0.9, beta2: float = 0.999,
             eps: float = 1e-8) -> "AdamState":
        zw = tuple(np.zeros_like(w) for w in params.weights)
        zb = tuple(np.zeros_like(b) for b in params.biases)
        return cls(m_weights=zw, m_biases=zb,
                   v_weights=tuple(np.zeros_like(w) for w in params.weights),
                   v_biases=tuple(np.zeros_like(b) for b in params.biases),
                   t=0, beta1=beta1, beta2=beta2, eps=eps)


def init_params(rng: np.random.Generator, layer_dims: list[int]) -> NetworkParams:
    """Fan-in-scaled uniform initialization, U(-sqrt(1/fan_in), +sqrt(1/fan_in)).

    Biases start at zero. Deterministic given the generator state.
    """
    dims = list(layer_dims)
    if len(dims) < 2:
        raise ValueError("layer_dims needs at least an input and an output dim")
    if any(int(d) != d or d <= 0 for d in dims):
        raise ValueError(f"layer_dims must be positive integers, got {dims}")
    if dims[-1] != 1:
        raise ValueError("last layer dim must be 1")
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(1.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParams(weights=tuple(weights), biases=tuple(biases))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_acts(params: NetworkParams, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """All hidden activations plus the unclamped output probability."""
    acts = [x]
    a = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.tanh(a @ w.T + b)
        acts.append(a)
    z = a @ params.weights[-1].T + params.biases[-1]
    return acts, _sigmoid(z[..., 0])


def forward_batch(params: NetworkParams, features: np.ndarray) -> np.ndarray:
    """Scores for a (n, d) feature matrix, each strictly inside (0, 1)."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.weights[0].shape[1]:
        raise ValueError(f"expected (n, {params.weights[0].shape[1]}) features, got {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("features contain non-finite values")
    _, p = _forward_acts(params, x)
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def forward(params: NetworkParams, features: np.ndarray) -> float:
    """Score a single feature vector."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-d feature vector, got shape {x.shape}")
    return float(forward_batch(params, x[None, :])[0])


def bxe_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy, -mean[y log p + (1-y) log(1-p)]."""
    p = np.asarray(probs, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.size == 0:
        raise ValueError("empty batch")
    if p.shape != y.shape:
        raise ValueError(f"probs {p.shape} and labels {y.shape} differ")
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def loss_and_grad(params: NetworkParams, batch: np.ndarray,
                  labels: np.ndarray) -> tuple[float, Gradient]:
    """Mean BXE over the batch and its exact analytic gradient.

    Raises FloatingPointError if the loss comes out non-finite.
    """
    x = np.asarray(batch, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim != 2 or x.shape[1] != params.weights[0].shape[1]:
        raise ValueError(f"expected (n, {params.weights[0].shape[1]}) batch, got {x.shape}")
    if y.shape != (x.shape[0],):
        raise ValueError(f"labels shape {y.shape} does not match batch of {x.shape[0]}")
    if x.shape[0] == 0:
        raise ValueError("empty batch")

    acts, p = _forward_acts(params, x)
    loss = bxe_loss(p, y)
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss!r}; p range [{p.min()}, {p.max()}]")

    n_layers = len(params.weights)
    g_w: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    g_b: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    # Fused sigmoid+BXE output delta; mean reduction divides by batch size.
    delta = ((p - y) / x.shape[0])[:, None]
    for i in range(n_layers - 1, -1, -1):
        g_w[i] = delta.T @ acts[i]
        g_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ params.weights[i]
            delta *= 1.0 - acts[i] * acts[i]
    return loss, Gradient(weights=tuple(g_w), biases=tuple(g_b))


def _check_mirror(params: NetworkParams, other_w: tuple[np.ndarray, ...],
                  other_b: tuple[np.ndarray, ...], what: str) -> None:
    if len(other_w) != len(params.weights):
        raise ValueError(f"{what}: layer count mismatch")
    for w, b, pw, pb in zip(other_w, other_b, params.weights, params.biases):
        if w.shape != pw.shape or b.shape != pb.shape:
            raise ValueError(f"{what}: shape mismatch {w.shape} vs {pw.shape}")


def adam_step(params: NetworkParams, grad: Gradient, state: AdamState,
              learning_rate: float) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update; returns the new params and state."""
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    _check_mirror(params, grad.weights, grad.biases, "gradient")
    _check_mirror(params, state.m_weights, state.m_biases, "adam state")
    t = state.t + 1
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t

    def upd(p, g, m, v):
        m_new = state.beta1 * m + (1.0 - state.beta1) * g
        v_new = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        step = learning_rate * (m_new / c1) / (np.sqrt(v_new / c2) + state.eps)
        return p - step, m_new, v_new

    new_w, new_mw, new_vw = [], [], []
    for p, g, m, v in zip(params.weights, grad.weights, state.m_weights, state.v_weights):
        a, b, c = upd(p, g, m, v)
        new_w.append(a); new_mw.append(b); new_vw.append(c)
    new_b, new_mb, new_vb = [], [], []
    for p, g, m, v in zip(params.biases, grad.biases, state.m_biases, state.v_biases):
        a, b, c = upd(p, g, m, v)
        new_b.append(a); new_mb.append(b); new_vb.append(c)

    new_params = NetworkParams(weights=tuple(new_w), biases=tuple(new_b),
                               hidden_activation=params.hidden_activation,
                               output_activation=params.output_activation)
    new_state = replace(state, m_weights=tuple(new_mw), m_biases=tuple(new_mb),
                        v_weights=tuple(new_vw), v_biases=tuple(new_vb), t=t)
    return new_params, new_state
