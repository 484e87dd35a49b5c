from typing import Optional, Sequence

import logging

import numpy as np

from src.nn.network import Network
from src.nn.optim import OptState
from src.telemetry import pruned_counter
logger = logging.getLogger(__name__)


def prune_dormant(
    net: Network,
    dormant: Sequence[Sequence[int]],
    opt: Optional[OptState] = None
) -> Network:
    """Permanently mask the listed hidden neurons and zero their outgoing rows.

    Already-pruned indices are skipped. Works in place and returns ``net``.
    """
    if len(dormant) != len(net.masks):
        raise ValueError(f"Expected {len(net.masks)} index sets, got {len(dormant)}")

    total = 0
    for layer, indices in enumerate(dormant):
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size == 0:
            continue
        size = net.masks[layer].shape[0]
        if idx.min() < 0 or idx.max() >= size:
            raise IndexError(f"Prune index out of range for layer {layer} of size {size}")
        idx = idx[~net.masks[layer][idx]]
        if idx.size == 0:
            continue

        net.masks[layer][idx] = True
        net.weights[layer + 1][idx, :] = 0.0
        if opt is not None:
            opt.zero_incoming(layer, idx)
            opt.zero_outgoing(layer, idx)
        total += int(idx.size)

    if total:
        pruned_counter.inc(total)
        logger.info(f"Pruned {total} neurons")
    return net
