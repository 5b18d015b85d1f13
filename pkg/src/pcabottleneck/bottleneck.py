"""PCA quantizers arranged over a ``B x D x H x W`` latent tensor.

Two layouts are supported:

* ``single_vector``: every sample is flattened to one ``D*H*W`` vector and
  quantized by a single shared state.
* ``multi_patch``: every spatial position ``p`` holds its own state over the
  ``D`` channels found there (``P = H*W`` states in total).

The quantizer parameters are constants as far as backpropagation is concerned:
they change only through :func:`bottleneck_update`, which consumes forward
activations, never gradients.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import RejectedInputError
from .oja import (
    DEFAULT_EPS_ORTHO,
    LearningRateSchedule,
    OjaPcaState,
    OjaStepTrace,
    init_state,
    oja_step,
    quantize,
    sort_components,
    truncate,
)
from .streaming import DEFAULT_GAMMA

MODES = ("single_vector", "multi_patch")
BACKWARD_MODES = ("projector", "straight_through")


@dataclass(frozen=True)
class BottleneckLayout:
    mode: str
    latent_shape: tuple[int, int, int]
    states: tuple[OjaPcaState, ...]
    backward_mode: str = "projector"

    def __post_init__(self):
        if self.mode not in MODES:
            raise RejectedInputError(f"unknown layout mode {self.mode!r}")
        if self.backward_mode not in BACKWARD_MODES:
            raise RejectedInputError(f"unknown backward mode {self.backward_mode!r}")
        d, h, w = self.latent_shape
        if self.mode == "single_vector":
            if len(self.states) != 1 or self.states[0].input_dim != d * h * w:
                raise RejectedInputError("single_vector layout needs one state over D*H*W inputs")
        else:
            if len(self.states) != h * w:
                raise RejectedInputError(f"multi_patch layout needs {h * w} states, got {len(self.states)}")
            if any(s.input_dim != d for s in self.states):
                raise RejectedInputError(f"every patch state must have input dimension {d}")
            if len({s.num_components for s in self.states}) != 1:
                raise RejectedInputError("patch states must share the number of components")

    @property
    def num_tokens(self) -> int:
        """Spatial latent tokens per image: 1 for single_vector, ``H*W`` for multi_patch."""
        return len(self.states)

    @property
    def num_components(self) -> int:
        return self.states[0].num_components

    @property
    def single_state(self) -> OjaPcaState | None:
        return self.states[0] if self.mode == "single_vector" else None

    @property
    def patch_states(self) -> tuple[OjaPcaState, ...] | None:
        return self.states if self.mode == "multi_patch" else None

    def drift(self) -> float:
        """Largest ``||C^T C - I||_F`` over all states."""
        return max(s.drift() for s in self.states)


def make_layout(
    mode: str,
    latent_shape: tuple[int, int, int],
    num_components: int,
    seed: int = 0,
    schedule: LearningRateSchedule | None = None,
    gamma: float = DEFAULT_GAMMA,
    ortho_period: int = 1,
    eps_ortho: float = DEFAULT_EPS_ORTHO,
    backward_mode: str = "projector",
) -> BottleneckLayout:
    """Build a layout of freshly initialized states.

    Patch ``p`` is seeded with ``seed + p``, so a one-position multi_patch
    layout starts from exactly the same basis as the single_vector layout.
    """
    d, h, w = latent_shape
    if mode == "single_vector":
        dims = [d * h * w]
    elif mode == "multi_patch":
        dims = [d] * (h * w)
    else:
        raise RejectedInputError(f"unknown layout mode {mode!r}")
    states = tuple(
        init_state(n, num_components, seed + p, schedule, gamma, ortho_period, eps_ortho)
        for p, n in enumerate(dims)
    )
    return BottleneckLayout(mode, tuple(latent_shape), states, backward_mode)


def _check_latent(layout: BottleneckLayout, h, name: str = "h") -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 4 or h.shape[1:] != tuple(layout.latent_shape):
        raise RejectedInputError(f"{name} must have shape (B, {', '.join(map(str, layout.latent_shape))}), got {h.shape}")
    if not np.all(np.isfinite(h)):
        raise RejectedInputError(f"{name} contains non-finite entries")
    return h


def _blocks(layout: BottleneckLayout, h: np.ndarray) -> list[np.ndarray]:
    """Row-vector matrices, one per state, in the order of ``layout.states``."""
    b = h.shape[0]
    if layout.mode == "single_vector":
        return [np.ascontiguousarray(h.reshape(b, -1))]
    _, hh, ww = layout.latent_shape
    return [np.ascontiguousarray(h[:, :, i, j]) for i in range(hh) for j in range(ww)]


def _assemble(layout: BottleneckLayout, blocks: list[np.ndarray], b: int) -> np.ndarray:
    d, hh, ww = layout.latent_shape
    if layout.mode == "single_vector":
        return blocks[0].reshape(b, d, hh, ww)
    out = np.empty((b, d, hh, ww))
    for p, block in enumerate(blocks):
        out[:, :, p // ww, p % ww] = block
    return out


def bottleneck_forward(layout: BottleneckLayout, h) -> np.ndarray:
    """Quantize a latent batch; the layout is read, never modified."""
    h = _check_latent(layout, h)
    blocks = [quantize(s, z) for s, z in zip(layout.states, _blocks(layout, h))]
    return _assemble(layout, blocks, h.shape[0])


def bottleneck_update(
    layout: BottleneckLayout, h, traces: list[OjaStepTrace] | None = None
) -> BottleneckLayout:
    """One Oja step per state on the activations it sees in ``h``.

    Step traces are appended to ``traces`` when a list is given.
    """
    h = _check_latent(layout, h)
    states = []
    for state, z in zip(layout.states, _blocks(layout, h)):
        state, trace = oja_step(state, z)
        states.append(state)
        if traces is not None:
            traces.append(trace)
    return dataclasses.replace(layout, states=tuple(states))


def stop_gradient_backward(layout: BottleneckLayout, grad_out) -> np.ndarray:
    """Gradient with respect to the bottleneck input, with ``C`` and ``mu`` held constant.

    In ``projector`` mode each block's gradient is mapped through the Jacobian
    ``C C^T`` of the affine projection. ``straight_through`` copies it unchanged.
    """
    g = _check_latent(layout, grad_out, "grad_out")
    if layout.backward_mode == "straight_through":
        return g.copy()
    blocks = [(z @ s.basis) @ s.basis.T for s, z in zip(layout.states, _blocks(layout, g))]
    return _assemble(layout, blocks, g.shape[0])


def sort_layout(layout: BottleneckLayout, h) -> BottleneckLayout:
    """Sort each state's components by explained variance on the latents it sees in ``h``."""
    h = _check_latent(layout, h)
    states = tuple(sort_components(s, z) for s, z in zip(layout.states, _blocks(layout, h)))
    return dataclasses.replace(layout, states=states)


def truncate_layout(layout: BottleneckLayout, k: int) -> BottleneckLayout:
    return dataclasses.replace(layout, states=tuple(truncate(s, k) for s in layout.states))


def latent_blocks(layout: BottleneckLayout, h) -> list[np.ndarray]:
    """Per-state row-vector views of a latent batch (public form of the layout's gather)."""
    return _blocks(layout, _check_latent(layout, h))
