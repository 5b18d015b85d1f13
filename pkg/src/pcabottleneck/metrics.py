"""Reconstruction quality (PSNR, SSIM) and latent storage cost."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import RejectedInputError

SSIM_WINDOW = 8


@dataclass(frozen=True)
class BitBudgetSpec:
    """Per-image latent storage descriptor.

    ``continuous``: ``tokens`` positions, each storing ``active_channels``
    coefficients of ``bits_per_value`` bits. ``discrete``: ``tokens`` indices
    into a codebook of ``codebook_size`` entries.
    """

    kind: str
    tokens: int
    active_channels: int = 0
    bits_per_value: int = 32
    codebook_size: int = 0

    def __post_init__(self):
        if self.tokens < 1:
            raise RejectedInputError("tokens must be >= 1")
        if self.kind == "continuous":
            if self.active_channels < 1 or self.bits_per_value < 1:
                raise RejectedInputError("continuous budgets need active_channels >= 1 and bits_per_value >= 1")
        elif self.kind == "discrete":
            if self.codebook_size < 2:
                raise RejectedInputError("discrete budgets need codebook_size >= 2")
        else:
            raise RejectedInputError(f"unknown budget kind {self.kind!r}")

    @classmethod
    def continuous(cls, tokens: int, active_channels: int, bits_per_value: int = 32) -> "BitBudgetSpec":
        return cls("continuous", tokens, active_channels=active_channels, bits_per_value=bits_per_value)

    @classmethod
    def discrete(cls, tokens: int, codebook_size: int) -> "BitBudgetSpec":
        return cls("discrete", tokens, bits_per_value=0, codebook_size=codebook_size)


def bit_budget(spec: BitBudgetSpec, ceil_per_token: bool = False) -> float:
    """Bits per image: ``N*k*b`` (continuous) or ``N*log2(K)`` (discrete).

    Discrete budgets are real-valued unless ``ceil_per_token`` rounds each
    index up to whole bits.
    """
    if spec.kind == "continuous":
        return float(spec.tokens * spec.active_channels * spec.bits_per_value)
    per_token = math.log2(spec.codebook_size)
    if ceil_per_token:
        per_token = math.ceil(per_token)
    return spec.tokens * per_token


def _pair(x_hat, x) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x_hat, dtype=np.float64)
    b = np.asarray(x, dtype=np.float64)
    if a.shape != b.shape:
        raise RejectedInputError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def psnr(x_hat, x, peak: float = 1.0) -> float:
    """``10 log10(peak^2 / MSE)`` over all entries; ``inf`` for identical inputs."""
    a, b = _pair(x_hat, x)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _ssim_2d(a: np.ndarray, b: np.ndarray, c1: float, c2: float, win: int) -> float:
    wa = sliding_window_view(a, (win, win))
    wb = sliding_window_view(b, (win, win))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    var_a = (wa * wa).mean(axis=(-2, -1)) - mu_a * mu_a
    var_b = (wb * wb).mean(axis=(-2, -1)) - mu_b * mu_b
    cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(x_hat, x, peak: float = 1.0, window: int = SSIM_WINDOW) -> float:
    """Mean SSIM over all 8x8 windows (uniform weights, stride 1).

    Accepts ``(H, W)``, ``(C, H, W)`` or ``(B, C, H, W)`` arrays; leading axes
    are treated as separate channels/images and averaged.
    """
    a, b = _pair(x_hat, x)
    if a.ndim < 2 or min(a.shape[-2:]) < window:
        raise RejectedInputError(f"images must be at least {window}x{window}, got shape {a.shape}")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    planes_a = a.reshape(-1, *a.shape[-2:])
    planes_b = b.reshape(-1, *b.shape[-2:])
    return float(np.mean([_ssim_2d(pa, pb, c1, c2, window) for pa, pb in zip(planes_a, planes_b)]))
