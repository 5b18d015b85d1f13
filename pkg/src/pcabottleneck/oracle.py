"""Exact batch PCA and subspace comparison, used as ground truth for the online estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RejectedInputError
from .linalg import as_matrix, orthonormality_error, sym_eig

ORTHONORMAL_TOL = 1e-6


@dataclass(frozen=True)
class SpectrumEstimate:
    covariance: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sample_mean: np.ndarray


def sample_covariance(data) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and covariance with 1/M normalization."""
    x = as_matrix(data, "data")
    if x.shape[0] < 2:
        raise RejectedInputError("need at least 2 samples")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / x.shape[0]
    return mean, 0.5 * (cov + cov.T)


def batch_pca(data, q: int) -> SpectrumEstimate:
    """Top-``q`` eigenpairs of the sample covariance of ``data`` (rows are samples)."""
    x = as_matrix(data, "data")
    if not 1 <= q <= x.shape[1]:
        raise RejectedInputError(f"q must lie in [1, {x.shape[1]}], got {q}")
    mean, cov = sample_covariance(x)
    dec = sym_eig(cov)
    return SpectrumEstimate(
        covariance=cov,
        eigenvalues=dec.eigenvalues[:q],
        eigenvectors=dec.eigenvectors[:, :q],
        sample_mean=mean,
    )


def principal_angles(a, b) -> np.ndarray:
    """Principal angles (radians, descending) between the column spans of two orthonormal bases."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise RejectedInputError(f"bases must have equal shape, got {a.shape} and {b.shape}")
    for name, m in (("a", a), ("b", b)):
        if orthonormality_error(m) > ORTHONORMAL_TOL:
            raise RejectedInputError(f"{name} does not have orthonormal columns")
    # arccos is ill-conditioned near 0; take small angles from the sines of the residual instead
    cosines = np.sort(np.linalg.svd(a.T @ b, compute_uv=False))
    sines = np.sort(np.linalg.svd(b - a @ (a.T @ b), compute_uv=False))[::-1]
    angles = np.where(cosines > np.sqrt(0.5), np.arcsin(np.clip(sines, 0.0, 1.0)), np.arccos(np.clip(cosines, -1.0, 1.0)))
    return np.sort(angles)[::-1]


def reconstruction_mse(c, data) -> float:
    """Mean squared residual ``mean_i ||z_i - C C^T z_i||^2`` after centering ``data`` by its sample mean."""
    c = as_matrix(c, "c")
    x = as_matrix(data, "data")
    if x.shape[1] != c.shape[0]:
        raise RejectedInputError(f"data has {x.shape[1]} columns but basis has {c.shape[0]} rows")
    xc = x - x.mean(axis=0)
    resid = xc - (xc @ c) @ c.T
    return float(np.mean(np.sum(resid * resid, axis=1)))


def trace_identity_mse(c, data) -> float:
    """``tr(S) - tr(C^T S C)`` for the 1/M sample covariance ``S``; equals :func:`reconstruction_mse` for orthonormal ``C``."""
    c = as_matrix(c, "c")
    _, cov = sample_covariance(data)
    return float(np.trace(cov) - np.trace(c.T @ cov @ c))
