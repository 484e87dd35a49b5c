from typing import Optional

import logging

import numpy as np

from src.config import settings
from src.exceptions import NonFiniteError, ShapeError
logger = logging.getLogger(__name__)

# Slack on the cumulative-mass comparison so equal singular values count exactly
_MASS_TOL = 1e-12


def effective_rank(features: np.ndarray, delta: Optional[float] = None) -> int:
    """Smallest k whose top-k singular values hold ``1 - delta`` of the total."""
    delta = settings.effective_rank_delta if delta is None else delta
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")

    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError(f"Feature matrix must be 2-D, got shape {features.shape}")
    if not np.isfinite(features).all():
        raise NonFiniteError("Feature matrix contains non-finite values")

    sv = np.linalg.svd(features, compute_uv=False)
    total = sv.sum()
    if total == 0.0:
        raise ValueError("Effective rank of an all-zero feature matrix is undefined")
    mass = np.cumsum(sv) / total
    return int(np.searchsorted(mass, 1.0 - delta - _MASS_TOL, side="left") + 1)
