"""Online PCA quantizer: an orthonormal basis ``C`` and a fade-averaged mean ``mu``.

Vectors are quantized by orthogonal projection onto the affine subspace
``mu + span(C)``. The basis is learned from minibatches with a Sanger-style
Oja update and kept orthonormal by symmetric re-orthonormalization.

All state-transforming functions return a new :class:`OjaPcaState`; inputs are
never modified.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailureError, RejectedInputError
from .linalg import _inv_sqrt_core, as_matrix, orthonormality_error, random_orthonormal
from .streaming import DEFAULT_GAMMA, GammaFadeMean, gamma_fade_update

DRIFT_BOUND = 0.1
DEFAULT_EPS_ORTHO = 1e-8


@dataclass(frozen=True)
class LearningRateSchedule:
    kind: str = "constant"
    eta0: float = 0.01
    decay: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "inverse_time"):
            raise RejectedInputError(f"unknown schedule kind {self.kind!r}")
        if not self.eta0 > 0:
            raise RejectedInputError("eta0 must be positive")
        if not self.decay >= 0:
            raise RejectedInputError("decay must be non-negative")

    def eta(self, t: int) -> float:
        if self.kind == "constant":
            return self.eta0
        return self.eta0 / (1.0 + self.decay * t)


@dataclass(frozen=True)
class OjaStepTrace:
    projected: np.ndarray
    gram: np.ndarray
    delta_norm: float
    eta_used: float


@dataclass(frozen=True)
class OjaPcaState:
    """Quantizer state.

    ``ortho_period`` is the number of Oja steps between re-orthonormalizations
    (0 disables them). With ``track_mean=False`` the mean stays where it is,
    which is only useful for analysing the basis update in isolation.
    """

    basis: np.ndarray
    mean: GammaFadeMean
    schedule: LearningRateSchedule = field(default_factory=LearningRateSchedule)
    steps_taken: int = 0
    ortho_period: int = 1
    eps_ortho: float = DEFAULT_EPS_ORTHO
    track_mean: bool = True

    @property
    def input_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def num_components(self) -> int:
        return self.basis.shape[1]

    @property
    def mu(self) -> np.ndarray:
        return self.mean.mu

    def drift(self) -> float:
        return orthonormality_error(self.basis)


def init_state(
    input_dim: int,
    num_components: int,
    seed: int = 0,
    schedule: LearningRateSchedule | None = None,
    gamma: float = DEFAULT_GAMMA,
    ortho_period: int = 1,
    eps_ortho: float = DEFAULT_EPS_ORTHO,
    track_mean: bool = True,
) -> OjaPcaState:
    """Fresh state with a seeded random orthonormal basis and an empty mean."""
    if not 1 <= num_components <= input_dim:
        raise RejectedInputError(f"need 1 <= Q <= N, got Q={num_components}, N={input_dim}")
    if ortho_period < 0:
        raise RejectedInputError("ortho_period must be >= 0")
    if not eps_ortho > 0:
        raise RejectedInputError("eps_ortho must be positive")
    rng = np.random.default_rng(seed)
    return OjaPcaState(
        basis=random_orthonormal(input_dim, num_components, rng),
        mean=GammaFadeMean.zeros(input_dim, gamma),
        schedule=schedule or LearningRateSchedule(),
        ortho_period=ortho_period,
        eps_ortho=eps_ortho,
        track_mean=track_mean,
    )


def _check_vectors(state: OjaPcaState, z, width: int, name: str) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim not in (1, 2) or z.shape[-1] != width:
        raise RejectedInputError(f"{name} must have trailing dimension {width}, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise RejectedInputError(f"{name} contains non-finite entries")
    return z


# project / reconstruct / quantize accept a single vector or a matrix of row vectors.


def project(state: OjaPcaState, z) -> np.ndarray:
    z = _check_vectors(state, z, state.input_dim, "z")
    return (z - state.mu) @ state.basis


def reconstruct(state: OjaPcaState, y) -> np.ndarray:
    y = _check_vectors(state, y, state.num_components, "y")
    return y @ state.basis.T + state.mu


def quantize(state: OjaPcaState, z) -> np.ndarray:
    return reconstruct(state, project(state, z))


def reorthonormalize(state: OjaPcaState) -> OjaPcaState:
    """Replace ``C`` by ``C (C^T C)^{-1/2}``, with Gram eigenvalues floored at ``eps_ortho``."""
    c = state.basis
    if not np.all(np.isfinite(c)):
        raise NumericalFailureError("basis contains non-finite entries")
    gram = c.T @ c
    gram = 0.5 * (gram + gram.T)
    return dataclasses.replace(state, basis=c @ _inv_sqrt_core(gram, state.eps_ortho))


def oja_step(state: OjaPcaState, batch) -> tuple[OjaPcaState, OjaStepTrace]:
    """One minibatch update of the mean and the basis.

    The mean is updated first and the batch is centered with the new mean.
    The basis moves by ``eta_t * (Z^T Y - C Up(Y^T Y)) / B`` where ``Y = Z C``,
    and is re-orthonormalized every ``ortho_period`` steps.

    Raises
    ------
    RejectedInputError
        On an empty, mis-shaped or non-finite batch.
    NumericalFailureError
        If ``||C^T C - I||_F`` exceeds 0.1 after the step.
    """
    z = as_matrix(batch, "batch")
    if z.shape[0] < 1 or z.shape[1] != state.input_dim:
        raise RejectedInputError(f"batch must be B x {state.input_dim} with B >= 1, got {z.shape}")

    mean = gamma_fade_update(state.mean, z.mean(axis=0)) if state.track_mean else state.mean
    zc = z - mean.mu
    c = state.basis
    y = zc @ c
    gram = y.T @ y
    delta = (zc.T @ y - c @ np.triu(gram)) / z.shape[0]
    eta = state.schedule.eta(state.steps_taken)

    new = dataclasses.replace(state, basis=c + eta * delta, mean=mean, steps_taken=state.steps_taken + 1)
    if state.ortho_period and new.steps_taken % state.ortho_period == 0:
        new = reorthonormalize(new)
    drift = new.drift()
    if not drift < DRIFT_BOUND:
        raise NumericalFailureError(f"basis drifted from orthonormality: ||C^T C - I||_F = {drift:.3g}")

    trace = OjaStepTrace(projected=y, gram=gram, delta_norm=float(np.linalg.norm(delta)), eta_used=eta)
    return new, trace


def _check_data(state: OjaPcaState, data) -> np.ndarray:
    x = as_matrix(data, "data")
    if x.shape[0] < 2:
        raise RejectedInputError("need at least 2 samples")
    if x.shape[1] != state.input_dim:
        raise RejectedInputError(f"data must have {state.input_dim} columns, got {x.shape[1]}")
    return x


def explained_variance(state: OjaPcaState, data) -> np.ndarray:
    """Variance (1/M normalization) of each component's coefficient over ``data``, centered by the data's own mean."""
    x = _check_data(state, data)
    y = (x - x.mean(axis=0)) @ state.basis
    return np.mean(y * y, axis=0)


def sort_components(state: OjaPcaState, data) -> OjaPcaState:
    """Reorder basis columns by non-increasing explained variance on ``data`` (stable for ties)."""
    order = np.argsort(-explained_variance(state, data), kind="stable")
    return dataclasses.replace(state, basis=state.basis[:, order])


def truncate(state: OjaPcaState, k: int) -> OjaPcaState:
    """Keep the first ``k`` components. Sort the state first for this to mean "top k"."""
    if not 1 <= k <= state.num_components:
        raise RejectedInputError(f"k must lie in [1, {state.num_components}], got {k}")
    if k == state.num_components:
        return state
    return dataclasses.replace(state, basis=state.basis[:, :k].copy())
