"""Evaluation sweeps over trained models: truncation, scaling grids, latent traversal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autoencoder import PcaAutoencoder
from .bottleneck import BottleneckLayout, latent_blocks, sort_layout, truncate_layout
from .errors import RejectedInputError
from .metrics import BitBudgetSpec, bit_budget, psnr, ssim
from .oja import explained_variance, project, reconstruct

BITS_PER_VALUE = 32


@dataclass(frozen=True)
class EvalRow:
    k: int
    bits: float
    mse: float  # per-pixel mean squared error
    psnr: float
    ssim: float


def truncated_layout(model: PcaAutoencoder, images, k: int | None, sorted_layout: BottleneckLayout | None = None):
    """The model's layout restricted to its top-``k`` components (ranked on ``images``' latents).

    ``k=None`` or ``k=Q`` returns the layout unchanged.
    """
    q = model.layout.num_components
    if k is None or k == q:
        return model.layout
    if not 1 <= k <= q:
        raise RejectedInputError(f"k must lie in [1, {q}], got {k}")
    if sorted_layout is None:
        sorted_layout = sort_layout(model.layout, model.encode(images))
    return truncate_layout(sorted_layout, k)


def evaluate(model: PcaAutoencoder, images, k: int | None = None, sorted_layout=None) -> EvalRow:
    images = np.asarray(images, dtype=np.float64)
    layout = truncated_layout(model, images, k, sorted_layout)
    x_hat = model.reconstruct(images, layout)
    k_used = layout.num_components
    bits = bit_budget(BitBudgetSpec.continuous(layout.num_tokens, k_used, BITS_PER_VALUE))
    mse = float(np.mean((x_hat - images) ** 2))
    return EvalRow(k_used, bits, mse, psnr(x_hat, images), ssim(x_hat, images))


def truncation_sweep(model: PcaAutoencoder, images, ks) -> list[EvalRow]:
    """Evaluate at each ``k``; components are ranked once on the full dataset."""
    images = np.asarray(images, dtype=np.float64)
    ranked = sort_layout(model.layout, model.encode(images))
    return [evaluate(model, images, k, ranked) for k in ks]


def fraction_to_k(fraction: float, q: int) -> int:
    if not 0.0 < fraction <= 1.0:
        raise RejectedInputError(f"fractions must lie in (0, 1], got {fraction}")
    return max(1, int(round(fraction * q)))


def tile_grid(rows: list[np.ndarray], gap: int = 1, fill: float = 1.0) -> np.ndarray:
    """Tile lists of ``(H, W)`` images row by row.

    Every tile is followed by ``gap`` filler pixels to its right and below it,
    so the result is ``rows*(H+gap)`` by ``cols*(W+gap)``.
    """
    n_rows = len(rows)
    n_cols = max(len(r) for r in rows)
    h, w = rows[0][0].shape
    out = np.full((n_rows * (h + gap), n_cols * (w + gap)), fill)
    for i, row in enumerate(rows):
        for j, img in enumerate(row):
            out[i * (h + gap) : i * (h + gap) + h, j * (w + gap) : j * (w + gap) + w] = img
    return out


def _planes(images: np.ndarray) -> list[np.ndarray]:
    # Channel mean, for grayscale display.
    return list(np.asarray(images).mean(axis=1))


def scaling_sweep(model: PcaAutoencoder, images, fractions, grid_images: int = 8):
    """One evaluation row and one original-vs-reconstruction grid per fraction of components kept."""
    if len(fractions) == 0:
        raise RejectedInputError("need at least one fraction")
    images = np.asarray(images, dtype=np.float64)
    q = model.layout.num_components
    ks = [fraction_to_k(f, q) for f in fractions]
    ranked = sort_layout(model.layout, model.encode(images))
    shown = images[:grid_images]
    rows, grids = [], []
    for k in ks:
        rows.append(evaluate(model, images, k, ranked))
        recon = model.reconstruct(shown, truncated_layout(model, images, k, ranked))
        grids.append(tile_grid([_planes(shown), _planes(recon)]))
    return rows, grids


@dataclass
class Traversal:
    frames: np.ndarray  # (steps, C, H, W)
    values: np.ndarray  # traversal positions in standard-deviation units
    coefficients: np.ndarray  # raw coefficient written into the component
    component_std: float


def traverse(model: PcaAutoencoder, images, image_index: int, component: int,
             value_range=(-2.0, 2.0), steps: int = 9) -> Traversal:
    """Sweep one sorted component of one image's latent and decode each setting.

    Components are ranked by explained variance on the latents of ``images``.
    The chosen coefficient is set to ``v * std`` for ``steps`` evenly spaced
    ``v`` in ``value_range``, where ``std`` is that component's explained
    standard deviation; all other coefficients keep the image's own values.
    """
    if model.layout.mode != "single_vector":
        raise RejectedInputError("traversal requires a single_vector layout")
    if steps < 1:
        raise RejectedInputError("steps must be >= 1")
    images = np.asarray(images, dtype=np.float64)
    if not 0 <= image_index < len(images):
        raise RejectedInputError(f"image index {image_index} out of range")
    latents = model.encode(images)
    state = sort_layout(model.layout, latents).states[0]
    if not 0 <= component < state.num_components:
        raise RejectedInputError(f"component must lie in [0, {state.num_components}), got {component}")
    z_all = latent_blocks(model.layout, latents)[0]
    std = float(np.sqrt(explained_variance(state, z_all)[component]))

    y = project(state, z_all[image_index])
    values = np.linspace(value_range[0], value_range[1], steps)
    ys = np.repeat(y[None, :], steps, axis=0)
    ys[:, component] = values * std
    h = reconstruct(state, ys).reshape((steps,) + model.latent_shape)
    return Traversal(model.decode(h), values, ys[:, component].copy(), std)


def sorted_coefficients(model: PcaAutoencoder, images) -> np.ndarray:
    """Coefficients of ``images`` on the single-vector basis sorted by explained variance."""
    if model.layout.mode != "single_vector":
        raise RejectedInputError("coefficients are defined for the single_vector layout")
    latents = model.encode(images)
    state = sort_layout(model.layout, latents).states[0]
    return project(state, latent_blocks(model.layout, latents)[0])


def pearson_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pearson correlation between every column of ``a`` and every column of ``b``."""
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    denom = np.outer(np.linalg.norm(a, axis=0), np.linalg.norm(b, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = (a.T @ b) / denom
    return np.nan_to_num(r)


def image_statistic(images, factor: str) -> np.ndarray:
    """Image-space readout of a toy-shapes factor, one value per image.

    ``x_position``: intensity-weighted horizontal centroid; ``radius``:
    ``sqrt(2 * mean squared distance from the centroid)``; ``brightness``:
    mean intensity. Negative pixels are clipped to zero first.
    """
    x = np.clip(np.asarray(images, dtype=np.float64).mean(axis=1), 0.0, None)
    if factor == "brightness":
        return x.mean(axis=(1, 2))
    mass = x.sum(axis=(1, 2)) + 1e-12
    cols = np.arange(x.shape[2]) + 0.5
    rows = np.arange(x.shape[1]) + 0.5
    cx = (x.sum(axis=1) * cols).sum(axis=1) / mass
    if factor == "x_position":
        return cx
    if factor == "radius":
        cy = (x.sum(axis=2) * rows).sum(axis=1) / mass
        d2 = (cols[None, None, :] - cx[:, None, None]) ** 2 + (rows[None, :, None] - cy[:, None, None]) ** 2
        return np.sqrt(2.0 * (x * d2).sum(axis=(1, 2)) / mass)
    raise RejectedInputError(f"unknown factor {factor!r}")


def monotone_frames(values) -> int:
    """Frames consistent with the overall trend: 1 for the first frame plus each step moving the same way as last-minus-first."""
    v = np.asarray(values, dtype=np.float64)
    direction = np.sign(v[-1] - v[0])
    if direction == 0:
        return 1
    return 1 + int(np.sum(np.sign(np.diff(v)) == direction))
