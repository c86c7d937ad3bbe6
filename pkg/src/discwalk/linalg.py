"""Dense linear-algebra contracts used by the sampler and the walk.

Exact truncated SVD, PSD spectral decomposition, and rank-revealing
orthonormalization, all backed by LAPACK through numpy/scipy.  A seeded
randomized (sketched) truncated SVD is provided separately for the walk's
large rebuilds; it trades exact per-vector residuals for an order of
magnitude in speed and is not a substitute for `top_right_singular` where
the exact contract matters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (nonincreasing, nonnegative) and orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    def reconstruct(self) -> np.ndarray:
        q, lam = self.eigenvectors, self.eigenvalues
        return (q * lam) @ q.T


def top_right_singular(mat: np.ndarray, count: int):
    """Top `count` singular values and right singular vectors, exact.

    Returns (sigma, v) with sigma nonincreasing and v's columns orthonormal;
    each pair satisfies ||M^T M v_i - sigma_i^2 v_i|| <= 1e-6 * sigma_1^2.
    """
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    if not 0 <= count <= min(mat.shape):
        raise ValueError(
            f"count={count} out of range for shape {mat.shape}"
        )
    if count == 0:
        return np.zeros(0), np.zeros((mat.shape[1], 0))
    _, s, vt = np.linalg.svd(mat, full_matrices=False)
    return s[:count].copy(), vt[:count].T.copy()


def sketched_top_right_singular(mat, count: int, rng: np.random.Generator,
                                oversample: int = 12, power_iters: int = 1):
    """Randomized truncated SVD (right vectors); deterministic given the rng.

    Accepts dense or scipy-sparse input.  Accuracy degrades gracefully at the
    tail of the requested range; callers that need certified residuals must
    use `top_right_singular`.
    """
    m, n = mat.shape
    count = min(count, m, n)
    if count == 0:
        return np.zeros(0), np.zeros((n, 0))
    ell = min(n, m, count + oversample)
    y = mat.T @ rng.standard_normal((m, ell))
    for _ in range(power_iters):
        y, _ = np.linalg.qr(y)
        y = mat.T @ (mat @ y)
    q, _ = np.linalg.qr(y)
    b = mat @ q
    _, s, wt = np.linalg.svd(np.asarray(b), full_matrices=False)
    v = q @ wt.T
    return s[:count].copy(), v[:, :count].copy()


def spectral_decompose_psd(u: np.ndarray, sym_tol: float = 1e-10,
                           neg_tol: float = 1e-8) -> SpectralDecomposition:
    """Spectral decomposition of a (numerically) PSD symmetric matrix.

    Eigenvalues in [-neg_tol*scale, 0) are clamped to 0; anything more
    negative raises.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(u).max(initial=0.0)))
    if np.abs(u - u.T).max(initial=0.0) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    lam, q = np.linalg.eigh((u + u.T) / 2.0)
    if lam.size and lam.min() < -neg_tol * scale:
        raise ValueError(
            f"matrix is not PSD: min eigenvalue {lam.min():.3e}"
        )
    lam = np.clip(lam, 0.0, None)[::-1].copy()
    q = q[:, ::-1].copy()
    return SpectralDecomposition(lam, q)


def orthonormalize(vectors, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the span of the given vectors.

    Vectors whose residual after projection on the part already kept falls
    below `tol` are dropped (default 1e-8 times the largest input norm), so
    coinciding blocked rows do not inflate the basis.  Rank-revealing QR;
    deterministic.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        mat = np.asarray(vectors, dtype=np.float64)
    else:
        vecs = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
        if not vecs:
            return np.zeros((0, 0))
        dim = vecs[0].size
        if any(v.size != dim for v in vecs):
            raise ValueError("vectors must share a common dimension")
        mat = np.column_stack(vecs)
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0))
    if mat.shape[1] > mat.shape[0]:
        raise ValueError(
            f"{mat.shape[1]} vectors in dimension {mat.shape[0]} cannot be "
            "independent; callers must pre-trim"
        )
    norms = np.linalg.norm(mat, axis=0)
    if tol is None:
        tol = 1e-8 * max(1e-300, float(norms.max(initial=0.0)))
    # Plain QR when full rank (the common case); rank-revealing pivoted QR
    # only when some residual dips below tol.
    q, r = np.linalg.qr(mat)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag.min() > tol:
        return q
    q, r, _ = sla.qr(mat, mode="economic", pivoting=True, check_finite=False)
    diag = np.abs(np.diag(r))
    rank = int((diag > tol).sum())
    # Pivoted QR puts the largest residuals first; diag is nonincreasing.
    return q[:, :rank].copy()
