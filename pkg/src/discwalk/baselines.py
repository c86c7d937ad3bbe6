"""Reference coloring algorithms for the comparison tables.

`beck_fiala` is the classical iterative rounding: repeatedly move the
fractional coloring along a kernel vector of the rows that still contain
more than k floating variables, freezing their sums, until every variable
hits +-1; its discrepancy is at most 2k-1 and that bound is asserted on
every output.  `gram_schmidt_walk` balances the column vectors with the
random-sign pivot walk and doubles as the rounding finisher.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .instance import SetSystem, discrepancy

_WALL_SNAP = 1e-9


def beck_fiala(sys: SetSystem) -> np.ndarray:
    """Deterministic iterative rounding with the classical 2k-1 guarantee."""
    n = sys.n_cols
    x = np.zeros(n)
    if n == 0:
        return x
    a = sys.dense()
    k_eff = int(sys.col_degrees.max(initial=0))
    if k_eff == 0 or sys.n_rows == 0:
        return np.ones(n)
    floating = np.ones(n, dtype=bool)
    support = a != 0
    for _ in range(2 * n + 2):
        f_idx = np.flatnonzero(floating)
        if f_idx.size == 0:
            break
        float_deg = support[:, f_idx].sum(axis=1)
        active = np.flatnonzero(float_deg > k_eff)
        if active.size == 0:
            # Remaining rows have at most k floating entries each; rounding
            # them to the nearest sign costs < 2 per entry.
            x[f_idx] = np.where(x[f_idx] >= 0.0, 1.0, -1.0)
            floating[f_idx] = False
            break
        sub = a[np.ix_(active, f_idx)]
        kernel = sla.null_space(sub)
        if kernel.shape[1] == 0:
            # There are fewer active rows than floating variables, so a
            # kernel exists; retry with a looser rank cutoff before giving up.
            kernel = sla.null_space(sub, rcond=1e-8)
        if kernel.shape[1] == 0:
            raise RuntimeError(
                f"kernel not found for {active.size} x {f_idx.size} active block"
            )
        u = kernel[:, 0]
        moving = np.abs(u) > 1e-12
        if not moving.any():
            raise RuntimeError("degenerate kernel vector")
        xf, uf = x[f_idx][moving], u[moving]
        walls = np.where(uf > 0, (1.0 - xf) / uf, (-1.0 - xf) / uf)
        alpha = float(walls.min())
        x[f_idx] += alpha * u
        hit = np.abs(x) >= 1.0 - _WALL_SNAP
        x[hit] = np.sign(x[hit])
        floating &= ~hit
    if floating.any():
        raise RuntimeError("iterative rounding failed to integralize")
    disc = discrepancy(sys, x)
    bound = 2 * k_eff - 1
    if disc > bound:
        raise AssertionError(f"discrepancy {disc} exceeds 2k-1 = {bound}")
    return x


def gsw_core(mat: np.ndarray, x0: np.ndarray,
             rng: np.random.Generator) -> np.ndarray:
    """Gram-Schmidt walk on the columns of ``mat`` from the fractional start
    ``x0``; returns a +-1 vector.

    Direction at each step: coefficient 1 on the pivot (the largest alive
    index), least-squares on the rest, realized through the inverse Gram
    matrix with Schur-complement downdates as variables freeze.
    """
    m, n = mat.shape
    x = np.clip(np.asarray(x0, dtype=np.float64).copy(), -1.0, 1.0)
    if n == 0:
        return x
    alive = np.abs(x) < 1.0 - 1e-12
    if not alive.any():
        return np.where(x >= 0.0, 1.0, -1.0)
    gram = mat.T @ mat
    ridge = 1e-10 * max(1.0, float(np.trace(gram)) / n)
    f_idx = np.flatnonzero(alive)
    h = np.linalg.inv(gram[np.ix_(f_idx, f_idx)] + ridge * np.eye(f_idx.size))
    removals_since = 0
    for _ in range(4 * n + 16):
        if not f_idx.size:
            break
        p_loc = f_idx.size - 1  # pivot: largest alive index
        u = h[:, p_loc] / h[p_loc, p_loc]
        xf = x[f_idx]
        moving = np.abs(u) > 1e-14
        uf, xm = u[moving], xf[moving]
        up = np.where(uf > 0, (1.0 - xm) / uf, (-1.0 - xm) / uf)
        dn = np.where(uf > 0, (-1.0 - xm) / uf, (1.0 - xm) / uf)
        d_pos = float(up.min())
        d_neg = float(dn.max())
        # Mean-zero step choice keeps the walk a martingale.
        if rng.random() < -d_neg / max(d_pos - d_neg, 1e-300):
            delta = d_pos
        else:
            delta = d_neg
        x[f_idx] = xf + delta * u
        hit_local = np.flatnonzero(np.abs(x[f_idx]) >= 1.0 - _WALL_SNAP)
        x[f_idx[hit_local]] = np.sign(x[f_idx[hit_local]])
        for loc in hit_local[::-1]:
            col = h[:, loc].copy()
            h -= np.outer(col, col) / col[loc]
            h = np.delete(np.delete(h, loc, axis=0), loc, axis=1)
            f_idx = np.delete(f_idx, loc)
            removals_since += 1
        if removals_since >= 64 and f_idx.size:
            h = np.linalg.inv(
                gram[np.ix_(f_idx, f_idx)] + ridge * np.eye(f_idx.size)
            )
            removals_since = 0
    if f_idx.size:
        raise RuntimeError("walk failed to reach a full coloring")
    return np.where(x >= 0.0, 1.0, -1.0)


def gram_schmidt_walk(sys: SetSystem, rng: np.random.Generator) -> np.ndarray:
    return gsw_core(sys.dense(), np.zeros(sys.n_cols), rng)


def random_coloring(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform i.i.d. +-1 coloring, the null baseline."""
    return rng.integers(0, 2, size=n).astype(np.float64) * 2.0 - 1.0
