"""Geometric-fade running mean of minibatch means.

The mean after ``n`` batches weights the ``k``-th most recent batch mean by
``gamma**k`` and normalizes by the total weight ``rho_n``. Unlike a
bias-corrected EMA it is an exact weighted average from the first batch on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import RejectedInputError

DEFAULT_GAMMA = 0.99


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise RejectedInputError(f"gamma must lie in (0, 1), got {gamma}")


def rho(n: int, gamma: float) -> float:
    """Total weight ``sum_{k<n} gamma**k = (1 - gamma**n) / (1 - gamma)``."""
    _check_gamma(gamma)
    if n < 0:
        raise RejectedInputError("n must be non-negative")
    return (1.0 - gamma**n) / (1.0 - gamma)


@dataclass(frozen=True)
class GammaFadeMean:
    """Running mean state.

    While ``step == 0`` the mean is the zero vector and is not meant for
    centering; the first update replaces it with the first batch mean.
    """

    mu: np.ndarray
    gamma: float = DEFAULT_GAMMA
    step: int = 0

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.step < 0:
            raise RejectedInputError("step must be non-negative")
        if not np.all(np.isfinite(self.mu)):
            raise RejectedInputError("mu must be finite")

    @classmethod
    def zeros(cls, dimension: int, gamma: float = DEFAULT_GAMMA) -> "GammaFadeMean":
        return cls(mu=np.zeros(dimension), gamma=gamma, step=0)

    @property
    def dimension(self) -> int:
        return self.mu.shape[0]


def gamma_fade_update(state: GammaFadeMean, batch_mean) -> GammaFadeMean:
    """Absorb one batch mean with the recursive form of the fade average."""
    z = np.asarray(batch_mean, dtype=np.float64)
    if z.shape != (state.dimension,):
        raise RejectedInputError(f"batch mean has shape {z.shape}, expected ({state.dimension},)")
    if not np.all(np.isfinite(z)):
        raise RejectedInputError("batch mean contains non-finite entries")
    n = state.step
    rho_n = rho(n, state.gamma)
    rho_next = rho(n + 1, state.gamma)
    mu = z / rho_next + (state.gamma * rho_n / rho_next) * state.mu
    return GammaFadeMean(mu=mu, gamma=state.gamma, step=n + 1)


def gamma_fade_direct(batch_means: Sequence, gamma: float) -> np.ndarray:
    """Fade average by explicit weighted summation (oldest mean first in ``batch_means``)."""
    _check_gamma(gamma)
    if len(batch_means) == 0:
        raise RejectedInputError("need at least one batch mean")
    means = np.asarray(batch_means, dtype=np.float64)
    if means.ndim == 1:
        means = means[:, None]
    total = np.zeros(means.shape[1])
    weight_sum = 0.0
    for k, z in enumerate(means[::-1]):
        w = gamma**k
        total += w * z
        weight_sum += w
    out = total / weight_sum
    return out if np.ndim(batch_means[0]) else out[0]
