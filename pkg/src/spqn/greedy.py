"""Greedy rank-one updates for approximating the squared Hessian.

The approximation target is H = B @ B where B is the (indefinite) Hessian
of a saddle objective; H is SPD whenever the objective is strongly convex
in x and strongly concave in y.  The solver keeps an SPD approximation Q
of H and improves it with symmetric rank-one corrections along greedily
chosen coordinate directions.  DFP, BFGS and their convex combination are
provided for completeness; the solver itself uses SR1 only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DimensionMismatch,
    SpdFactorization,
    rank_one_symmetric,
    spd_factorize,
    symmetrize,
)

# Relative safeguard on the SR1 denominator: the update is skipped when
# u^T (Q - H) u <= SR1_SKIP_TOL * u^T Q u.  Skipping keeps Q unchanged,
# which preserves every ordering invariant.
SR1_SKIP_TOL = 1e-10


class NonPositiveDiagonal(ValueError):
    """diag(H) has a non-positive entry, so H cannot be SPD."""


class DegenerateCurvature(ValueError):
    """An update denominator u^T H u (or u^T Q u) is non-positive."""


class SquaredHessian:
    """Matrix-free view of H = B @ B for a symmetric base matrix B.

    Products H u are computed as B (B u), two mat-vecs, and diag(H) as the
    squared row norms of B; neither requires forming H.  ``dense`` is for
    tests and diagnostics only.
    """

    __slots__ = ("base", "_diag")

    def __init__(self, base):
        self.base = np.asarray(base, dtype=float)
        self._diag = None

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    @property
    def diag(self) -> np.ndarray:
        if self._diag is None:
            self._diag = np.einsum("ij,ij->i", self.base, self.base)
        return self._diag

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self.base @ (self.base @ u)

    def dense(self) -> np.ndarray:
        return symmetrize(self.base @ self.base)


@dataclass
class ApproxState:
    """Current SPD approximation of the squared Hessian.

    Owned by a single solver run.  ``fact`` caches the Cholesky factor of
    ``q`` and is invalidated (set to None) whenever ``q`` changes.
    ``skipped`` counts SR1 updates rejected by the denominator safeguard,
    cumulative over the run.
    """

    q: np.ndarray
    fact: SpdFactorization | None = None
    skipped: int = 0

    def refresh(self) -> SpdFactorization:
        if self.fact is None:
            self.fact = spd_factorize(self.q)
        return self.fact


def greedy_index(q: np.ndarray, diag_h: np.ndarray) -> int:
    """Index i maximizing Q[i,i] / H[i,i]; ties break to the lowest index."""
    diag_h = np.asarray(diag_h, dtype=float)
    if q.shape[0] != diag_h.shape[0]:
        raise DimensionMismatch(
            f"Q dimension {q.shape[0]} vs diag(H) length {diag_h.shape[0]}"
        )
    if np.any(diag_h <= 0):
        raise NonPositiveDiagonal("diag(H) must be strictly positive")
    return int(np.argmax(np.diag(q) / diag_h))


def sr1_update(q, hu, u, tol_rel: float = SR1_SKIP_TOL):
    """Symmetric rank-one step of Q towards H along direction u.

    Returns (Q', skipped).  With v = Q u - H u and s = u^T v, applies
    Q' = Q - v v^T / s when s clears the relative safeguard, otherwise
    returns Q unchanged and reports the skip.
    """
    u = np.asarray(u, dtype=float)
    hu = np.asarray(hu, dtype=float)
    if q.shape[0] != u.shape[0] or hu.shape[0] != u.shape[0]:
        raise DimensionMismatch("Q, Hu and u dimensions must agree")
    qu = q @ u
    v = qu - hu
    s = float(u @ v)
    if s <= tol_rel * float(u @ qu):
        return q, True
    return rank_one_symmetric(q, v, -1.0 / s), False


def dfp_update(q, hu, u) -> np.ndarray:
    """DFP step of Q towards H along u; requires u^T H u > 0."""
    u = np.asarray(u, dtype=float)
    hu = np.asarray(hu, dtype=float)
    qu = q @ u
    uhu = float(u @ hu)
    if uhu <= 0:
        raise DegenerateCurvature(f"u^T H u = {uhu} must be positive")
    uqu = float(u @ qu)
    mixed = np.outer(hu, qu)
    mixed = mixed + mixed.T
    return q - mixed / uhu + (1.0 + uqu / uhu) * np.outer(hu, hu) / uhu


def bfgs_update(q, hu, u) -> np.ndarray:
    """BFGS step of Q towards H along u; requires positive curvatures."""
    u = np.asarray(u, dtype=float)
    hu = np.asarray(hu, dtype=float)
    qu = q @ u
    uqu = float(u @ qu)
    uhu = float(u @ hu)
    if uqu <= 0 or uhu <= 0:
        raise DegenerateCurvature(
            f"curvatures must be positive, got u^T Q u = {uqu}, u^T H u = {uhu}"
        )
    return q - np.outer(qu, qu) / uqu + np.outer(hu, hu) / uhu


def broyden_update(q, hu, u, tau: float) -> np.ndarray:
    """Convex combination tau * DFP + (1 - tau) * SR1.

    The endpoints return the component results exactly (bit-for-bit).
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if tau == 1.0:
        return dfp_update(q, hu, u)
    sr1_mat, _ = sr1_update(q, hu, u)
    if tau == 0.0:
        return sr1_mat
    return tau * dfp_update(q, hu, u) + (1.0 - tau) * sr1_mat


def _apply_sr1(state: ApproxState, hess_sq: SquaredHessian, u: np.ndarray) -> ApproxState:
    hu = hess_sq.matvec(u)
    q_new, skipped = sr1_update(state.q, hu, u)
    if skipped:
        state.skipped += 1
    else:
        state.q = q_new
        state.fact = None
    return state


def gsr1(state: ApproxState, hess_sq: SquaredHessian) -> ApproxState:
    """One greedy SR1 update of the state against the given target."""
    i = greedy_index(state.q, hess_sq.diag)
    u = np.zeros(hess_sq.dim)
    u[i] = 1.0
    return _apply_sr1(state, hess_sq, u)


def random_sr1(state: ApproxState, hess_sq: SquaredHessian, rng) -> ApproxState:
    """SR1 update along an i.i.d. standard normal direction (baseline)."""
    u = rng.standard_normal(hess_sq.dim)
    return _apply_sr1(state, hess_sq, u)


def gsr1_n(state: ApproxState, hess_sq: SquaredHessian, n: int) -> ApproxState:
    """n nested greedy SR1 updates against the same target; n = 0 is a no-op."""
    if n < 0:
        raise ValueError(f"update count must be non-negative, got {n}")
    for _ in range(n):
        gsr1(state, hess_sq)
    return state


def scale_correction(state: ApproxState, m_coef: float, r: float) -> ApproxState:
    """Scale Q by (1 + m_coef * r) after an iterate move of norm r.

    Restores the Loewner upper bound that the move may have broken.  With
    m_coef = 0 the state is returned untouched (bitwise), which is the
    case for objectives with a constant Hessian.
    """
    if m_coef < 0 or r < 0:
        raise ValueError("scaling inputs must be non-negative")
    scale = 1.0 + m_coef * r
    if scale == 1.0:
        return state
    state.q = state.q * scale
    if state.fact is not None:
        state.fact = state.fact.scaled(scale)
    return state
