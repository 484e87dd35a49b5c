"""ReDo: recycle dormant neurons.

A recycled neuron gets fresh incoming weights (bias back to 0) and its
outgoing row is zeroed, so the network output is unchanged wherever the
neuron was silent. Optimizer moments of every touched parameter are reset.
"""
from typing import List, Literal, Optional, Sequence

from dataclasses import dataclass, field
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.agent.records import RecycleRow
from src.dormancy.scores import dormant_set, neuron_scores
from src.exceptions import ShapeError
from src.nn.network import ActivationTrace, Network
from src.nn.optim import OptState
from src.telemetry import recycled_counter
logger = logging.getLogger(__name__)


class RecycleStrategy(BaseModel):

    model_config = ConfigDict(frozen=True, extra="forbid")

    incoming: Literal["reinit_original", "norm_scaled"] = "reinit_original"
    outgoing: Literal["zero", "random_init"] = "zero"

    @property
    def label(self) -> str:
        return f"{self.incoming}+{self.outgoing}"


@dataclass
class RecycleEvent:

    step_grad: int
    indices: List[np.ndarray]
    strategy: str
    tau_or_fraction: float
    optimizer_reset: bool = True

    @property
    def n_recycled(self) -> int:
        return sum(len(idx) for idx in self.indices)

    def rows(self) -> List[RecycleRow]:
        return [
            RecycleRow(self.step_grad, layer, len(idx), self.strategy, self.tau_or_fraction)
            for layer, idx in enumerate(self.indices)
        ]


def _incoming_norm_target(net: Network, layer: int, selected: np.ndarray) -> Optional[float]:

    keep = ~net.masks[layer].copy()
    keep[selected] = False
    if not keep.any():
        return None
    return float(np.linalg.norm(net.weights[layer][:, keep], axis=0).mean())


def recycle_neurons(
    net: Network,
    indices: Sequence[Sequence[int]],
    strategy: RecycleStrategy,
    opt: Optional[OptState],
    rng: np.random.Generator
) -> List[np.ndarray]:
    """Re-initialize the listed hidden neurons in place; pruned ones are skipped.

    Returns the indices actually recycled per hidden layer.
    """
    if len(indices) != len(net.masks):
        raise ShapeError(f"Expected {len(net.masks)} index sets, got {len(indices)}")

    done = []
    for layer, raw in enumerate(indices):
        idx = np.asarray(sorted(set(int(i) for i in raw)), dtype=np.int64)
        if idx.size:
            idx = idx[~net.masks[layer][idx]]
        done.append(idx)
        if idx.size == 0:
            continue

        spec = net.specs[layer]
        fresh = spec.init.sample(spec.in_dim, idx.size, rng)
        if strategy.incoming == "norm_scaled":
            target = _incoming_norm_target(net, layer, idx)
            norms = np.linalg.norm(fresh, axis=0)
            if target is not None:
                fresh = fresh * np.where(norms > 0.0, target / np.where(norms > 0.0, norms, 1.0), 0.0)
        net.weights[layer][:, idx] = fresh
        net.biases[layer][idx] = 0.0

        nxt = net.specs[layer + 1]
        if strategy.outgoing == "zero":
            net.weights[layer + 1][idx, :] = 0.0
        else:
            bound = nxt.init.limit(nxt.in_dim)
            net.weights[layer + 1][idx, :] = rng.uniform(-bound, bound, size=(idx.size, nxt.out_dim))

        if opt is not None:
            opt.zero_incoming(layer, idx)
            opt.zero_outgoing(layer, idx)

    total = sum(int(i.size) for i in done)
    if total:
        recycled_counter.labels(strategy=strategy.label).inc(total)
    return done


def redo_step(
    net: Network,
    trace: ActivationTrace,
    tau: float,
    strategy: RecycleStrategy,
    opt: Optional[OptState],
    rng: np.random.Generator,
    step_grad: int = 0
) -> RecycleEvent:
    """Recycle every unpruned hidden neuron whose score is at most ``tau``."""
    if trace.layer_sizes != net.hidden_sizes or trace.batch_size == 0:
        raise ShapeError(
            f"Trace layers {trace.layer_sizes} do not match network hidden sizes {net.hidden_sizes}"
        )
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")

    scores = neuron_scores(trace)
    selected = [dormant_set(s, tau, net.masks[i]) for i, s in enumerate(scores)]
    recycled = recycle_neurons(net, selected, strategy, opt, rng)
    event = RecycleEvent(step_grad, recycled, strategy.label, tau, optimizer_reset=opt is not None)
    if event.n_recycled:
        logger.info(f"ReDo at step {step_grad}: recycled {event.n_recycled} neurons (tau={tau})")
    return event
