"""Dense feedforward networks with explicit forward/backward passes.

Weights are stored as ``in_dim x out_dim`` float64 matrices so that a batch
``X`` (``batch x in_dim``) maps to ``X @ W + b``. Every layer remembers the
``InitSpec`` it was drawn from; recycling and resets re-sample from it.
"""
from typing import List, Literal, Optional, Sequence, Tuple

from dataclasses import dataclass, field
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.exceptions import NonFiniteError, ShapeError
logger = logging.getLogger(__name__)

ActivationKind = Literal["relu", "leaky_relu", "identity"]

_SEED_MASK = (1 << 64) - 1


class InitSpec(BaseModel):

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["scaled_uniform"] = "scaled_uniform"
    gain: float = Field(1.0, ge=0.0)
    stream: int = Field(0, ge=0)

    def limit(self, in_dim: int) -> float:
        return self.gain * math.sqrt(3.0 / in_dim)

    def sample(
        self,
        in_dim: int,
        out_dim: int,
        rng: np.random.Generator
    ) -> np.ndarray:
        """Draw an ``in_dim x out_dim`` block from Uniform(-L, L)."""
        bound = self.limit(in_dim)
        if bound == 0.0:
            return np.zeros((in_dim, out_dim), dtype=np.float64)
        return rng.uniform(-bound, bound, size=(in_dim, out_dim))


class LayerSpec(BaseModel):

    model_config = ConfigDict(frozen=True, extra="forbid")

    in_dim: int = Field(..., ge=1)
    out_dim: int = Field(..., ge=1)
    activation: ActivationKind = "relu"
    slope: float = Field(0.01, ge=0.0)
    init: InitSpec = Field(default_factory=InitSpec)


def dense_specs(
    in_dim: int,
    hidden: Sequence[int],
    out_dim: int,
    activation: ActivationKind = "relu",
    slope: float = 0.01,
    output_gain: float = 1.0
) -> List[LayerSpec]:
    """Hidden layers share ``activation``; the output layer is linear."""
    dims = [in_dim, *hidden, out_dim]
    specs = []
    for i in range(len(dims) - 1):
        last = i == len(dims) - 2
        specs.append(LayerSpec(
            in_dim=dims[i],
            out_dim=dims[i + 1],
            activation="identity" if last else activation,
            slope=slope,
            init=InitSpec(gain=output_gain if last else 1.0, stream=i)
        ))
    return specs


@dataclass
class ActivationTrace:
    """Post-activation values of every hidden layer for one batch."""

    activations: List[np.ndarray]
    masks: List[np.ndarray]

    @property
    def batch_size(self) -> int:
        return int(self.activations[0].shape[0]) if self.activations else 0

    @property
    def layer_sizes(self) -> List[int]:
        return [int(a.shape[1]) for a in self.activations]


@dataclass
class Gradients:

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def all_finite(self) -> bool:
        return all(np.isfinite(g).all() for g in (*self.weights, *self.biases))


@dataclass
class Network:

    specs: List[LayerSpec]
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    masks: List[np.ndarray] = field(default_factory=list)

    @property
    def n_layers(self) -> int:
        return len(self.specs)

    @property
    def input_dim(self) -> int:
        return self.specs[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.specs[-1].out_dim

    @property
    def hidden_sizes(self) -> List[int]:
        return [spec.out_dim for spec in self.specs[:-1]]

    def copy(self) -> "Network":
        return Network(
            specs=list(self.specs),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            masks=[m.copy() for m in self.masks]
        )

    def frozen_masks(self) -> List[Tuple[Optional[np.ndarray], Optional[np.ndarray]]]:
        """Per-layer (weight, bias) multipliers: 0 for pruned parameters, 1 elsewhere.

        ``None`` means every parameter of that tensor is trainable.
        """
        result: List[List[Optional[np.ndarray]]] = [[None, None] for _ in self.specs]
        for i, mask in enumerate(self.masks):
            if not mask.any():
                continue
            if result[i][0] is None:
                result[i][0] = np.ones_like(self.weights[i])
            if result[i][1] is None:
                result[i][1] = np.ones_like(self.biases[i])
            if result[i + 1][0] is None:
                result[i + 1][0] = np.ones_like(self.weights[i + 1])
            result[i][0][:, mask] = 0.0
            result[i][1][mask] = 0.0
            result[i + 1][0][mask, :] = 0.0
        return [(w, b) for w, b in result]

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def _layer_rng(seed: int, index: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & _SEED_MASK, index, stream]))


def _check_chain(specs: Sequence[LayerSpec]) -> None:

    if not specs:
        raise ShapeError("Network needs at least one layer")
    for i in range(len(specs) - 1):
        if specs[i].out_dim != specs[i + 1].in_dim:
            raise ShapeError(
                f"Layer {i} out_dim={specs[i].out_dim} does not match "
                f"layer {i + 1} in_dim={specs[i + 1].in_dim}"
            )


def build_network(specs: Sequence[LayerSpec], seed: int) -> Network:

    _check_chain(specs)
    weights = []
    biases = []
    for i, spec in enumerate(specs):
        rng = _layer_rng(seed, i, spec.init.stream)
        weights.append(spec.init.sample(spec.in_dim, spec.out_dim, rng))
        biases.append(np.zeros(spec.out_dim, dtype=np.float64))
    masks = [np.zeros(spec.out_dim, dtype=bool) for spec in specs[:-1]]

    logger.debug(f"Built network {[s.in_dim for s in specs] + [specs[-1].out_dim]} (seed={seed})")
    return Network(specs=list(specs), weights=weights, biases=biases, masks=masks)


def copy_network(net: Network) -> Network:
    return net.copy()


def _activate(z: np.ndarray, spec: LayerSpec) -> np.ndarray:

    if spec.activation == "relu":
        return np.maximum(z, 0.0)
    if spec.activation == "leaky_relu":
        return np.where(z > 0.0, z, spec.slope * z)
    return z


def _activation_grad(z: np.ndarray, spec: LayerSpec) -> np.ndarray:

    if spec.activation == "relu":
        return (z > 0.0).astype(np.float64)
    if spec.activation == "leaky_relu":
        return np.where(z > 0.0, 1.0, spec.slope)
    return np.ones_like(z)


def _check_batch(net: Network, batch: np.ndarray) -> np.ndarray:

    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise ShapeError(f"Batch shape {batch.shape} does not match input dim {net.input_dim}")
    if not np.isfinite(batch).all():
        raise NonFiniteError("Batch contains non-finite values")
    return batch


def _propagate(net: Network, batch: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:

    pre: List[np.ndarray] = []
    post: List[np.ndarray] = []
    h = batch
    last = net.n_layers - 1
    for i, spec in enumerate(net.specs):
        z = h @ net.weights[i] + net.biases[i]
        a = _activate(z, spec)
        if i < last:
            mask = net.masks[i]
            if mask.any():
                # Pruned neurons emit exact zeros
                a = np.where(mask, 0.0, a)
        pre.append(z)
        post.append(a)
        h = a
    return pre, post


def forward(net: Network, batch: np.ndarray) -> Tuple[np.ndarray, ActivationTrace]:

    batch = _check_batch(net, batch)
    _, post = _propagate(net, batch)
    trace = ActivationTrace(
        activations=post[:-1],
        masks=[m.copy() for m in net.masks]
    )
    return post[-1], trace


def predict(net: Network, batch: np.ndarray) -> np.ndarray:
    return forward(net, batch)[0]


def penultimate_features(net: Network, batch: np.ndarray) -> np.ndarray:

    if net.n_layers < 2:
        raise ShapeError("Network has no hidden layer")
    _, trace = forward(net, batch)
    return trace.activations[-1]


def backward(net: Network, batch: np.ndarray, loss_grad: np.ndarray) -> Gradients:

    batch = _check_batch(net, batch)
    pre, post = _propagate(net, batch)
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    if loss_grad.shape != post[-1].shape:
        raise ShapeError(f"loss_grad shape {loss_grad.shape} != output shape {post[-1].shape}")

    n = net.n_layers
    grad_w: List[np.ndarray] = [np.empty(0)] * n
    grad_b: List[np.ndarray] = [np.empty(0)] * n
    delta = loss_grad * _activation_grad(pre[-1], net.specs[-1])
    for i in range(n - 1, -1, -1):
        inputs = batch if i == 0 else post[i - 1]
        grad_w[i] = inputs.T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * _activation_grad(pre[i - 1], net.specs[i - 1])
            mask = net.masks[i - 1]
            if mask.any():
                delta[:, mask] = 0.0

    for i, mask in enumerate(net.masks):
        if mask.any():
            grad_w[i][:, mask] = 0.0
            grad_b[i][mask] = 0.0
            grad_w[i + 1][mask, :] = 0.0

    return Gradients(weights=grad_w, biases=grad_b)
