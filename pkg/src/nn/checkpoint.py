"""Network checkpoints.

Layout (numpy ``.npz`` archive, no pickled objects):

- ``header``: UTF-8 JSON bytes stored as a ``uint8`` array, holding
  ``{"format_version": 1, "layers": [LayerSpec, ...]}``
- ``W{i}`` / ``b{i}``: float64 weight (in_dim x out_dim) and bias arrays
- ``mask{i}``: boolean prune mask of hidden layer ``i``
"""
from pathlib import Path
from typing import Union

import json
import logging

import numpy as np

from src.exceptions import CheckpointError
from src.nn.network import LayerSpec, Network, _check_chain
logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(net: Network, path: Union[str, Path]) -> Path:

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "format_version": FORMAT_VERSION,
        "layers": [spec.model_dump() for spec in net.specs]
    }
    arrays = {"header": np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8)}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"W{i}"] = w
        arrays[f"b{i}"] = b
    for i, mask in enumerate(net.masks):
        arrays[f"mask{i}"] = mask

    with open(path, "wb") as f:
        np.savez(f, **arrays)
    logger.info(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Network:

    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")

    try:
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(bytes(data["header"]).decode("utf-8"))
            if header.get("format_version") != FORMAT_VERSION:
                raise CheckpointError(
                    f"Unsupported checkpoint version {header.get('format_version')} in {path}"
                )
            specs = [LayerSpec.model_validate(layer) for layer in header["layers"]]
            _check_chain(specs)
            weights = [np.array(data[f"W{i}"], dtype=np.float64) for i in range(len(specs))]
            biases = [np.array(data[f"b{i}"], dtype=np.float64) for i in range(len(specs))]
            masks = [np.array(data[f"mask{i}"], dtype=bool) for i in range(len(specs) - 1)]
    except CheckpointError:
        raise
    except Exception as e:
        logger.error(f"Failed to read checkpoint {path}: {e}")
        raise CheckpointError(f"Corrupt checkpoint {path}: {e}") from e

    for i, spec in enumerate(specs):
        if weights[i].shape != (spec.in_dim, spec.out_dim) or biases[i].shape != (spec.out_dim,):
            raise CheckpointError(f"Layer {i} arrays do not match their spec in {path}")

    return Network(specs=specs, weights=weights, biases=biases, masks=masks)
