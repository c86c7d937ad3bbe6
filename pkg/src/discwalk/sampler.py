"""Forbidden-subspace construction and sub-isotropic direction sampling.

Given the subspace W spanned by the blocked vectors, the solver finds an
h x h PSD matrix U with: (i) U vanishing on W, (ii) diagonal at most 1,
(iii) trace at least kappa*h, (iv) U <= (1/eta) diag(U).  Random update
directions are then drawn as v = Q Lambda^{1/2} r / sqrt(Tr U) for a
Rademacher vector r, which has exact unit norm, zero mean, and covariance
U / Tr(U).

The solver is a projected alternating scheme (PSD clamp, condition-(iv)
clamp, W-block zeroing, diagonal capping, scalar rescale); every returned
plan is certified post hoc by an independent verifier, and a stalled solve
raises with diagnostics instead of returning an uncertified plan.  A cheap
projection-based sampler that preserves (i)-(iii) exactly is provided as the
default mode for long runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import SpectralDecomposition, orthonormalize, spectral_decompose_psd

DEFAULT_KAPPA = 0.25
DEFAULT_ETA = 0.25

W_TOL = 1e-8
DIAG_TOL = 1e-8
TRACE_TOL = 1e-6
PSD_TOL = 1e-6


class SolverFailure(RuntimeError):
    """The alternating solver stalled; carries the residual diagnostics."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of the blocked subspace W inside R^h."""

    dim: int
    basis: np.ndarray  # (h, r), orthonormal columns
    declared_count: int

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class SubIsotropicPlan:
    u: np.ndarray
    decomposition: SpectralDecomposition
    trace: float
    kappa: float
    eta: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.u.shape[0]

    @property
    def sqrt_factor(self) -> np.ndarray:
        """Q * sqrt(lambda) restricted to nonzero eigenvalues; draws are
        factor @ r / sqrt(trace)."""
        lam = self.decomposition.eigenvalues
        keep = lam > 0
        return self.decomposition.eigenvectors[:, keep] * np.sqrt(lam[keep])


def build_subspace(blocked_row_vectors, dang_singular_vectors,
                   safe_singular_vectors, x_alive) -> SubspaceBasis:
    """Orthonormal span of blocked rows, singular families, and the coloring.

    Enforces the caps rather than truncating: at most 3*floor(h/10) blocked
    row vectors, floor(h/11) per singular family, and floor(h/2) in total
    (callers pre-trim; a violation here is a caller bug).
    """
    x_alive = np.asarray(x_alive, dtype=np.float64).ravel()
    h = x_alive.size
    blocked = [np.asarray(v, dtype=np.float64).ravel() for v in blocked_row_vectors]
    dang = [np.asarray(v, dtype=np.float64).ravel() for v in dang_singular_vectors]
    safe = [np.asarray(v, dtype=np.float64).ravel() for v in safe_singular_vectors]
    for v in blocked + dang + safe:
        if v.size != h:
            raise ValueError("blocked vector dimension mismatch")
    if len(blocked) > (3 * h) // 10:
        raise ValueError(
            f"{len(blocked)} blocked rows exceed the floor(3h/10) cap at h={h}"
        )
    if len(dang) > h // 11 or len(safe) > h // 11:
        raise ValueError(
            f"singular family exceeds the floor(h/11) cap at h={h}"
        )
    declared = len(blocked) + len(dang) + len(safe) + 1
    if declared > h // 2:
        raise ValueError(
            f"{declared} submitted vectors exceed floor(h/2)={h // 2}"
        )
    cols = blocked + dang + safe
    if float(np.linalg.norm(x_alive)) > 0.0:
        cols.append(x_alive)
    if not cols:
        return SubspaceBasis(dim=h, basis=np.zeros((h, 0)), declared_count=declared)
    basis = orthonormalize(cols)
    return SubspaceBasis(dim=h, basis=basis, declared_count=declared)


def verify_subisotropic(u, w: SubspaceBasis, kappa: float, eta: float) -> dict:
    """Recompute the four plan conditions from U alone; independent of the
    solver path.  Returns residuals and an overall pass flag."""
    u = np.asarray(u, dtype=np.float64)
    h = u.shape[0]
    lam = np.linalg.eigvalsh((u + u.T) / 2.0)
    b = w.basis
    w_res = float(np.einsum("ij,ij->j", b, u @ b).max(initial=0.0))
    diag = np.diag(u)
    m = np.diag(diag) / eta - u
    m_min = float(np.linalg.eigvalsh((m + m.T) / 2.0).min(initial=0.0))
    report = {
        "psd_min_eig": float(lam.min(initial=0.0)),
        "w_residual": w_res,
        "diag_excess": float((diag - 1.0).max(initial=0.0)),
        "trace": float(np.trace(u)),
        "trace_required": kappa * h,
        "iv_min_eig": m_min,
    }
    report["ok"] = (
        report["psd_min_eig"] >= -PSD_TOL
        and report["w_residual"] <= W_TOL
        and report["diag_excess"] <= DIAG_TOL
        and report["trace"] >= kappa * h - TRACE_TOL
        and report["iv_min_eig"] >= -PSD_TOL
    )
    return report


def solve_subisotropic(w: SubspaceBasis, kappa: float = DEFAULT_KAPPA,
                       eta: float = DEFAULT_ETA, max_iter: int = 500,
                       tol: float = 1e-7) -> SubIsotropicPlan:
    """Alternating-projection solve for the sub-isotropic matrix U.

    Starts from the projector onto the complement of W (which satisfies
    (i)-(iii) outright) and alternates eigenvalue clamps for the two PSD
    conditions with exact restorations of the linear ones.  The returned
    plan is re-checked by `verify_subisotropic`.
    """
    h, r = w.dim, w.rank
    if h == 0:
        raise ValueError("empty ambient space")
    if kappa + eta + r / h > 1 + 1e-12:
        raise ValueError(
            f"infeasible parameters: kappa+eta+dim(W)/h = "
            f"{kappa + eta + r / h:.4f} > 1"
        )
    b = w.basis
    proj = np.eye(h) - b @ b.T if r else np.eye(h)
    u = proj.copy()
    iterations = 0
    for iterations in range(1, max_iter + 1):
        # PSD clamp.
        lam, q = np.linalg.eigh((u + u.T) / 2.0)
        if lam.min(initial=0.0) < -tol:
            u = (q * np.clip(lam, 0.0, None)) @ q.T
        # Condition (iv) clamp: lower U along the violating directions.
        m = np.diag(np.diag(u)) / eta - u
        mu, z = np.linalg.eigh((m + m.T) / 2.0)
        bad = mu < -tol
        if bad.any():
            u = u + (z[:, bad] * mu[bad]) @ z[:, bad].T
            lam, q = np.linalg.eigh((u + u.T) / 2.0)
            u = (q * np.clip(lam, 0.0, None)) @ q.T
        # Zero the W block (exact, keeps PSD).
        if r:
            u = proj @ u @ proj
        u = (u + u.T) / 2.0
        # Diagonal cap by congruence, then scalar rescale to tighten (ii).
        diag = np.diag(u)
        if diag.max(initial=0.0) > 1.0:
            d = np.sqrt(np.minimum(1.0, 1.0 / np.maximum(diag, 1e-300)))
            u = u * d[:, None] * d[None, :]
        top = np.diag(u).max(initial=0.0)
        if top > 1e-300:
            u = u / top
        report = verify_subisotropic(u, w, kappa, eta)
        if report["ok"]:
            break
    else:
        report = verify_subisotropic(u, w, kappa, eta)
    report["iterations"] = iterations
    if not report["ok"]:
        raise SolverFailure(
            f"sub-isotropic solve stalled after {iterations} iterations "
            f"(h={h}, dim W={r})",
            report,
        )
    dec = spectral_decompose_psd(u)
    return SubIsotropicPlan(
        u=u, decomposition=dec, trace=dec.trace, kappa=kappa, eta=eta,
        diagnostics=report,
    )


def _direction_from_signs(plan: SubIsotropicPlan, signs: np.ndarray) -> np.ndarray:
    factor = plan.sqrt_factor
    if plan.trace <= 0:
        raise ValueError("plan has zero trace")
    return (factor @ signs[: factor.shape[1]]) / np.sqrt(plan.trace)


def draw_direction(plan: SubIsotropicPlan, rng: np.random.Generator) -> np.ndarray:
    """One random update direction: exact unit norm, mean zero, covariance
    U / Tr(U), orthogonal to W."""
    r_nz = plan.sqrt_factor.shape[1]
    if plan.trace <= 0 or r_nz == 0:
        raise ValueError("plan has zero trace")
    signs = rng.integers(0, 2, size=r_nz).astype(np.float64) * 2.0 - 1.0
    return _direction_from_signs(plan, signs)


def draw_directions(plan: SubIsotropicPlan, rng: np.random.Generator,
                    count: int) -> np.ndarray:
    """Batched draws, one per column; same math as `draw_direction`."""
    factor = plan.sqrt_factor
    if plan.trace <= 0 or factor.shape[1] == 0:
        raise ValueError("plan has zero trace")
    signs = rng.integers(0, 2, size=(factor.shape[1], count)).astype(np.float64)
    signs = signs * 2.0 - 1.0
    return (factor @ signs) / np.sqrt(plan.trace)


def projection_fallback_direction(w: SubspaceBasis,
                                  rng: np.random.Generator) -> np.ndarray:
    """Normalized Gaussian projected onto the complement of W.

    Preserves plan conditions (i)-(iii) exactly in distribution but does not
    certify (iv); used as the fast default sampler mode.
    """
    h, r = w.dim, w.rank
    if r >= h:
        raise ValueError("W spans the whole space; no direction available")
    b = w.basis
    for _ in range(8):
        g = rng.standard_normal(h)
        if r:
            g = g - b @ (b.T @ g)
            g = g - b @ (b.T @ g)
        norm = np.linalg.norm(g)
        if norm > 1e-10:
            return g / norm
    raise ValueError("degenerate Gaussian draws; cannot find a direction")
