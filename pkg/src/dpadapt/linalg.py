"""Dense symmetric-matrix kernel.

Eigendecomposition, spectral norm, and the shift-stabilized
log-trace-exp / normalized-matrix-exponential operations that the
smoothed discrepancy objectives are built on.  All functions are pure
and accept any array-like that coerces to a square 2-d float array.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, InvalidParameterError


def symmetrize(a) -> np.ndarray:
    """Return (A + A^T)/2 as a float array, rejecting non-finite input."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix contains non-finite entries")
    return 0.5 * (m + m.T)


def eigh(a):
    """Eigendecomposition of a symmetric matrix.

    Returns (eigenvalues sorted descending, eigenvectors as columns), so
    that M = V @ diag(lam) @ V.T.
    """
    m = symmetrize(a)
    lam, vec = np.linalg.eigh(m)
    # numpy returns ascending order
    return lam[::-1].copy(), vec[:, ::-1].copy()


def spectral_norm(a) -> float:
    """Largest absolute eigenvalue, max(|lam_1|, |lam_d|)."""
    lam, _ = eigh(a)
    return float(max(abs(lam[0]), abs(lam[-1])))


def log_trace_exp(a, mu: float) -> float:
    """(1/mu) * log Tr exp(mu*M), computed with a lambda_max shift.

    The shifted form lam_max + (1/mu)*log sum_i exp(mu*(lam_i - lam_max))
    never overflows, even for mu*lam_max far beyond 700.
    """
    if mu <= 0:
        raise InvalidParameterError(f"mu must be positive, got {mu}")
    lam, _ = eigh(a)
    top = lam[0]
    return float(top + np.log(np.sum(np.exp(mu * (lam - top)))) / mu)


def exp_weights(a, mu: float) -> np.ndarray:
    """exp(mu*M) / Tr exp(mu*M), the spectral softmax weight matrix.

    The lambda_max shift cancels between numerator and denominator, so
    the result is exact up to rounding: symmetric PSD with unit trace.
    """
    if mu <= 0:
        raise InvalidParameterError(f"mu must be positive, got {mu}")
    lam, vec = eigh(a)
    w = np.exp(mu * (lam - lam[0]))
    w /= w.sum()
    return (vec * w) @ vec.T
