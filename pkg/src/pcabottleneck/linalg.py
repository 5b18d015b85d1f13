"""Small dense linear algebra kernels.

Matrices are plain ``float64`` numpy arrays. The symmetric eigensolver is a
cyclic Jacobi iteration, which is accurate and deterministic at the sizes used
here (a few hundred rows at most) and keeps the decomposition independent of
LAPACK, so LAPACK can serve as a cross-check in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailureError, RejectedInputError

MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-12
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class SymEigDecomposition:
    """Eigenvalues in descending order and the matching orthonormal eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate ``a`` as a finite 2-D float64 array and return it."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise RejectedInputError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise RejectedInputError(f"{name} contains non-finite entries")
    return m


def _as_square(a, name: str) -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise RejectedInputError(f"{name} must be square, got shape {m.shape}")
    return m


def _as_symmetric(a, name: str) -> np.ndarray:
    m = _as_square(a, name)
    scale = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > SYMMETRY_TOL * max(scale, np.finfo(float).tiny):
        raise RejectedInputError(f"{name} is not symmetric")
    return 0.5 * (m + m.T)


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise RejectedInputError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def upper_triangular(g) -> np.ndarray:
    """Upper-triangular part of a square matrix, diagonal included."""
    return np.triu(_as_square(g, "g"))


SMALL_N = 32


def _rotation(app: float, aqq: float, apq: float) -> tuple[float, float]:
    theta = (aqq - app) / (2.0 * apq)
    if abs(theta) > 1e150:
        t = 0.5 / theta
    else:
        t = math.copysign(1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0)), theta)
    c = 1.0 / math.sqrt(t * t + 1.0)
    return c, t * c


def _jacobi_small(a: np.ndarray, max_sweeps: int, threshold: float):
    # Python floats beat numpy call overhead for tiny matrices.
    n = a.shape[0]
    m = a.tolist()
    v = np.eye(n).tolist()
    for _ in range(max_sweeps + 1):
        off = math.sqrt(2.0 * sum(x * x for i, row in enumerate(m) for x in row[i + 1 :]))
        if off <= threshold:
            return np.array([m[i][i] for i in range(n)]), np.array(v)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p][q]
                if apq == 0.0:
                    continue
                c, s = _rotation(m[p][p], m[q][q], apq)
                for row in m:
                    rp, rq = row[p], row[q]
                    row[p] = c * rp - s * rq
                    row[q] = s * rp + c * rq
                mp, mq = m[p], m[q]
                for k in range(n):
                    xp, xq = mp[k], mq[k]
                    mp[k] = c * xp - s * xq
                    mq[k] = s * xp + c * xq
                mp[q] = mq[p] = 0.0
                for row in v:
                    rp, rq = row[p], row[q]
                    row[p] = c * rp - s * rq
                    row[q] = s * rp + c * rq
    return None


def _jacobi_large(a: np.ndarray, max_sweeps: int, threshold: float):
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps + 1):
        if np.linalg.norm(a - np.diag(np.diag(a))) <= threshold:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                c, s = _rotation(float(a[p, p]), float(a[q, q]), apq)
                rot = np.array([[c, s], [-s, c]])
                pq = [p, q]
                a[:, pq] = a[:, pq] @ rot
                a[pq, :] = rot.T @ a[pq, :]
                a[p, q] = a[q, p] = 0.0
                v[:, pq] = v[:, pq] @ rot
    return None


def sym_eig(m, max_sweeps: int = MAX_SWEEPS, tol: float = OFFDIAG_TOL) -> SymEigDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol * ||m||_F``. Eigenpairs come back sorted by descending eigenvalue,
    and each eigenvector is signed so its largest-magnitude entry is positive.

    Raises
    ------
    RejectedInputError
        If ``m`` is not square or not symmetric (relative tolerance 1e-10).
    NumericalFailureError
        If convergence is not reached within ``max_sweeps`` sweeps.
    """
    return _sym_eig_core(_as_symmetric(m, "m"), max_sweeps, tol)


def _sym_eig_core(a: np.ndarray, max_sweeps: int = MAX_SWEEPS, tol: float = OFFDIAG_TOL) -> SymEigDecomposition:
    # ``a`` must already be a finite symmetric float64 matrix; it is not modified.
    a = a.copy()
    n = a.shape[0]
    threshold = tol * np.linalg.norm(a)
    solver = _jacobi_small if n <= SMALL_N else _jacobi_large
    result = solver(a, max_sweeps, threshold)
    if result is None:
        raise NumericalFailureError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    w, v = result

    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    pivots = np.argmax(np.abs(v), axis=0)
    signs = np.where(v[pivots, np.arange(n)] < 0.0, -1.0, 1.0)
    return SymEigDecomposition(eigenvalues=w, eigenvectors=v * signs)


def inv_sqrt_sym(g, eps: float) -> np.ndarray:
    """Symmetric inverse square root ``U diag(max(lam, eps))^{-1/2} U^T``."""
    if not eps > 0:
        raise RejectedInputError("eps must be positive")
    return _inv_sqrt_core(_as_symmetric(g, "g"), eps)


def _inv_sqrt_core(g: np.ndarray, eps: float) -> np.ndarray:
    dec = _sym_eig_core(g)
    u = dec.eigenvectors
    out = (u * np.maximum(dec.eigenvalues, eps) ** -0.5) @ u.T
    return 0.5 * (out + out.T)


def orthonormality_error(c) -> float:
    """Frobenius norm of ``C^T C - I``."""
    c = np.asarray(c, dtype=np.float64)
    return float(np.linalg.norm(c.T @ c - np.eye(c.shape[1])))


def random_orthonormal(n: int, q: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed ``n x q`` matrix with orthonormal columns.

    QR of a Gaussian matrix, with column signs fixed by the diagonal of R so
    the distribution is uniform.
    """
    if not 1 <= q <= n:
        raise RejectedInputError(f"need 1 <= q <= n, got q={q}, n={n}")
    qm, r = np.linalg.qr(rng.standard_normal((n, q)))
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return qm * d
