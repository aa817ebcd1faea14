"""Dense symmetric linear algebra kernels.

Everything here assumes small dense matrices (d up to a few hundred), so
O(d^2) storage and O(d^3) factorizations are fine.  Matrices are plain
float64 numpy arrays stored fully; symmetry is enforced on construction
by averaging whenever a product could introduce floating-point asymmetry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class DimensionMismatch(ValueError):
    """Operands have incompatible shapes."""


class NotPositiveDefinite(ValueError):
    """A matrix required to be SPD has a non-positive pivot."""


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return (A + A^T) / 2, removing floating-point asymmetry."""
    a = np.asarray(a, dtype=float)
    return (a + a.T) / 2


def _as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class SpdFactorization:
    """Cholesky factor of an SPD matrix: A = lower @ lower.T."""

    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def scaled(self, factor: float) -> "SpdFactorization":
        """Factorization of factor * A, for factor > 0."""
        return SpdFactorization(self.lower * np.sqrt(factor))


def spd_factorize(a) -> SpdFactorization:
    """Cholesky-factorize a symmetric positive definite matrix.

    Raises NotPositiveDefinite when a pivot is non-positive, which signals
    that a positive-definiteness invariant was violated upstream.
    """
    a = _as_square(a)
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return SpdFactorization(lower)


def solve_spd(fact: SpdFactorization, b) -> np.ndarray:
    """Solve A x = b given the factorization of A."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != fact.dim:
        raise DimensionMismatch(
            f"rhs length {b.shape[0]} does not match dimension {fact.dim}"
        )
    return scipy.linalg.cho_solve((fact.lower, True), b)


def rank_one_symmetric(a, v, c: float) -> np.ndarray:
    """Return A + c * v v^T.  Exactly symmetric for symmetric A."""
    a = _as_square(a)
    v = np.asarray(v, dtype=float)
    if v.shape[0] != a.shape[0]:
        raise DimensionMismatch(
            f"vector length {v.shape[0]} does not match dimension {a.shape[0]}"
        )
    return a + c * np.outer(v, v)


def eig_extremes(a) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix.

    Diagnostic/test path; uses a full dense eigendecomposition.
    """
    w = np.linalg.eigvalsh(_as_square(a))
    return float(w[0]), float(w[-1])


def loewner_leq(a, b, tol: float = 0.0) -> bool:
    """True iff A <= B in the Loewner order, i.e. lambda_min(B - A) >= -tol."""
    a = _as_square(a, "A")
    b = _as_square(b, "B")
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return eig_extremes(b - a)[0] >= -tol
