"""Dense symmetric-positive-definite kernels.

Everything here operates on plain ``numpy`` arrays.  Factorizations and
solves are delegated to LAPACK through ``scipy.linalg``; this module adds
the domain-specific validation (symmetry, positive-definite pivot
threshold) and the closed-form AR(1) precision matrix used to
cross-validate the dense inverse.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, DomainError, NotPositiveDefinite

_EPS = np.finfo(float).eps


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


def cholesky(m) -> np.ndarray:
    """Lower Cholesky factor L of a symmetric positive definite matrix.

    Raises NotPositiveDefinite when LAPACK fails or when any pivot falls
    at or below ``dim * eps * max(diagonal)``, which flags matrices that
    are technically factorizable but numerically on the PD boundary
    (|phi| -> 1, d -> 0.5 produce such covariances).
    """
    m = _as_square(m)
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise DimensionMismatch("matrix is not symmetric")
    try:
        lower = scipy.linalg.cholesky(m, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    pivots = np.diag(lower) ** 2
    threshold = m.shape[0] * _EPS * float(np.max(np.diag(m)))
    if np.any(pivots <= threshold):
        raise NotPositiveDefinite(
            f"pivot {pivots.min():.3e} at or below threshold {threshold:.3e}"
        )
    return lower


def invert_spd(m) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix, symmetrized."""
    lower = cholesky(m)
    inv = scipy.linalg.cho_solve((lower, True), np.eye(lower.shape[0]), check_finite=False)
    return (inv + inv.T) / 2.0


def invert_from_factor(lower: np.ndarray) -> np.ndarray:
    """Inverse from an existing lower Cholesky factor (no re-factorization)."""
    inv = scipy.linalg.cho_solve((lower, True), np.eye(lower.shape[0]), check_finite=False)
    return (inv + inv.T) / 2.0


def log_det(lower: np.ndarray) -> float:
    """log det of the factored matrix: 2 * sum(log diag(L))."""
    return 2.0 * float(np.sum(np.log(np.diag(lower))))


def ar1_precision_analytic(phi: float, T: int) -> np.ndarray:
    """Closed-form inverse of the AR(1) covariance with entries
    phi^|l-m| / (1 - phi^2).

    For T >= 2 the inverse is tridiagonal: 1 on the corner diagonal
    entries, 1 + phi^2 on the interior diagonal, -phi off the diagonal.
    For T = 1 the inverse is the scalar 1 - phi^2.
    """
    if not abs(phi) < 1.0:
        raise DomainError(f"ar1 precision requires |phi| < 1, got {phi}")
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    if T == 1:
        return np.array([[1.0 - phi * phi]])
    prec = np.zeros((T, T))
    idx = np.arange(T)
    prec[idx, idx] = 1.0 + phi * phi
    prec[0, 0] = prec[T - 1, T - 1] = 1.0
    prec[idx[:-1], idx[1:]] = -phi
    prec[idx[1:], idx[:-1]] = -phi
    return prec
