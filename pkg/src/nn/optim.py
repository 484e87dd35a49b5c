from typing import List, Literal, Sequence, Tuple

from dataclasses import dataclass, field
import logging

import numpy as np

from src.exceptions import ConfigError, NonFiniteError, ShapeError
from src.nn.network import Gradients, Network
logger = logging.getLogger(__name__)

OptimizerKind = Literal["sgd", "adam"]


@dataclass
class OptState:
    """Optimizer hyper-parameters plus per-parameter moment buffers.

    ``first_*`` holds the SGD velocity or the Adam first moment, ``second_*``
    the Adam second moment (unused by SGD).
    """

    kind: OptimizerKind
    learning_rate: float
    weight_decay: float = 0.0
    momentum: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1.5e-4
    step: int = 0
    first_w: List[np.ndarray] = field(default_factory=list)
    first_b: List[np.ndarray] = field(default_factory=list)
    second_w: List[np.ndarray] = field(default_factory=list)
    second_b: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def create(
        cls,
        net: Network,
        kind: OptimizerKind = "adam",
        learning_rate: float = 1e-3,
        weight_decay: float = 0.0,
        momentum: float = 0.0,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1.5e-4
    ) -> "OptState":

        if kind not in ("sgd", "adam"):
            raise ConfigError(f"Unknown optimizer kind: {kind}")
        if eps <= 0:
            raise ConfigError(f"Optimizer eps must be positive, got {eps}")
        if weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {weight_decay}")

        return cls(
            kind=kind,
            learning_rate=learning_rate,
            weight_decay=weight_decay,
            momentum=momentum,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            first_w=[np.zeros_like(w) for w in net.weights],
            first_b=[np.zeros_like(b) for b in net.biases],
            second_w=[np.zeros_like(w) for w in net.weights],
            second_b=[np.zeros_like(b) for b in net.biases]
        )

    def zero_incoming(self, layer: int, neurons: Sequence[int]) -> None:
        """Reset moments of the incoming weights and biases of ``neurons``."""
        idx = np.asarray(neurons, dtype=np.intp)
        for buf in (self.first_w, self.second_w):
            buf[layer][:, idx] = 0.0
        for buf in (self.first_b, self.second_b):
            buf[layer][idx] = 0.0

    def zero_outgoing(self, layer: int, neurons: Sequence[int]) -> None:
        """Reset moments of the weights leaving ``neurons`` of hidden ``layer``."""
        idx = np.asarray(neurons, dtype=np.intp)
        for buf in (self.first_w, self.second_w):
            buf[layer + 1][idx, :] = 0.0

    def zero_layer(self, layer: int) -> None:
        for buf in (self.first_w, self.second_w, self.first_b, self.second_b):
            buf[layer][...] = 0.0


def _check_grads(net: Network, grads: Gradients) -> None:

    for i, (w, gw, b, gb) in enumerate(zip(net.weights, grads.weights, net.biases, grads.biases)):
        if gw.shape != w.shape or gb.shape != b.shape:
            raise ShapeError(f"Gradient shape mismatch in layer {i}")
        if not (np.isfinite(gw).all() and np.isfinite(gb).all()):
            logger.error(f"Non-finite gradient in layer {i}")
            raise NonFiniteError(f"Non-finite gradient in layer {i}")


def opt_step(net: Network, grads: Gradients, opt: OptState) -> Tuple[Network, OptState]:
    """Apply one update in place and return ``(net, opt)``.

    Decoupled weight decay ``p <- p * (1 - lr * wd)`` is applied to weights
    (never biases) before the gradient step. Pruned parameters are untouched.
    """
    _check_grads(net, grads)
    lr = opt.learning_rate
    decay = lr * opt.weight_decay
    frozen = net.frozen_masks()
    opt.step += 1

    if opt.kind == "adam":
        bc1 = 1.0 - opt.beta1 ** opt.step
        bc2 = 1.0 - opt.beta2 ** opt.step

    for i in range(net.n_layers):
        w_mask, b_mask = frozen[i]
        params = (
            (net.weights[i], grads.weights[i], opt.first_w[i], opt.second_w[i], w_mask, True),
            (net.biases[i], grads.biases[i], opt.first_b[i], opt.second_b[i], b_mask, False),
        )
        for p, g, first, second, mask, is_weight in params:
            if is_weight and decay != 0.0:
                if mask is None:
                    p *= 1.0 - decay
                else:
                    p *= 1.0 - decay * mask

            if opt.kind == "adam":
                first *= opt.beta1
                first += (1.0 - opt.beta1) * g
                second *= opt.beta2
                second += (1.0 - opt.beta2) * (g * g)
                update = lr * (first / bc1) / (np.sqrt(second / bc2) + opt.eps)
            else:
                if opt.momentum != 0.0:
                    first *= opt.momentum
                    first += g
                    update = lr * first
                else:
                    update = lr * g

            if mask is not None:
                update = update * mask
            p -= update

    return net, opt
