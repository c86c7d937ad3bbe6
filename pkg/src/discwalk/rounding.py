"""Rounding a frozen fractional coloring to a full +-1 coloring.

Coordinates that the walk pushed past the alive threshold are snapped to the
nearest sign (each row moves by at most its support over 2n); the small
remainder is finished with the Gram-Schmidt walk started from the fractional
values, which keeps the per-row correction subgaussian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import gsw_core
from .instance import CanonicalInstance

DEFAULT_FREE_CAP = 4096


@dataclass(frozen=True)
class PartialColoring:
    """Fixed-sign columns plus the still-free index set and the fractional
    source values the finisher starts from."""

    values: np.ndarray      # +-1 where fixed; undefined where free
    fixed_mask: np.ndarray
    source: np.ndarray      # the fractional coloring that was snapped

    def __post_init__(self):
        if not (self.values.shape == self.fixed_mask.shape == self.source.shape):
            raise ValueError("partial coloring fields must share a shape")

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.fixed_mask)

    @property
    def fixed(self) -> dict:
        return {
            int(j): int(self.values[j]) for j in np.flatnonzero(self.fixed_mask)
        }


def snap_frozen(x: np.ndarray, n: int) -> PartialColoring:
    """Snap coordinates with |x_j| > 1 - 1/(2n) to their sign; rest stay free."""
    x = np.asarray(x, dtype=np.float64)
    threshold = 1.0 - 1.0 / (2.0 * max(n, 1))
    fixed = np.abs(x) > threshold
    values = np.zeros_like(x)
    values[fixed] = np.sign(x[fixed])
    return PartialColoring(values=values, fixed_mask=fixed, source=x.copy())


def finish_remainder(inst: CanonicalInstance, partial: PartialColoring,
                     rng: np.random.Generator,
                     cap: int = DEFAULT_FREE_CAP) -> np.ndarray:
    """Complete the free columns with a Gram-Schmidt walk; fixed columns are
    never touched."""
    free = partial.free
    if free.size > cap:
        raise ValueError(f"{free.size} free columns exceed the cap {cap}")
    out = partial.values.copy()
    if free.size == 0:
        return out
    mat = inst.system.matrix.tocsc()[:, free].toarray()
    out[free] = gsw_core(mat, partial.source[free], rng)
    return out


def round_full(x: np.ndarray, inst: CanonicalInstance,
               rng: np.random.Generator, cap: int = DEFAULT_FREE_CAP):
    """Snap then finish; returns (full coloring, per-row |<a_i, x>|)."""
    partial = snap_frozen(x, inst.system.n_cols)
    full = finish_remainder(inst, partial, rng, cap=cap)
    per_row = np.abs(inst.system.matrix @ full)
    return full, per_row
