import logging

import numpy as np

from src.exceptions import ConfigError
from src.nn.network import Network
from src.nn.optim import OptState
from src.telemetry import resets_counter
logger = logging.getLogger(__name__)


def reset_last_layers(
    net: Network,
    k: int,
    opt: OptState,
    rng: np.random.Generator
) -> Network:
    """Re-sample the final ``k`` layers from their stored init distributions.

    Prune masks of reset hidden layers are cleared. Pruned neurons feeding the
    reset block stay pruned, so their fresh outgoing rows are zeroed again.
    """
    n = net.n_layers
    if not 1 <= k <= n:
        raise ConfigError(f"reset k must lie in [1, {n}], got {k}")

    first = n - k
    for i in range(first, n):
        spec = net.specs[i]
        net.weights[i] = spec.init.sample(spec.in_dim, spec.out_dim, rng)
        net.biases[i] = np.zeros(spec.out_dim, dtype=np.float64)
        if opt is not None:
            opt.zero_layer(i)
        if i < n - 1:
            net.masks[i][:] = False

    if first > 0:
        feeding = net.masks[first - 1]
        if feeding.any():
            net.weights[first][feeding, :] = 0.0

    resets_counter.inc()
    logger.debug(f"Reset last {k} of {n} layers")
    return net
