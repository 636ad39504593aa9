"""Second-stage learner: weighted ridge regression on the public source
sample, plus squared-loss evaluation helpers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import linalg
from .errors import InvalidInputError, InvalidParameterError, RankDeficientError

_RANK_TOL = 1e-12


@dataclass(frozen=True)
class LinearHypothesis:
    w: np.ndarray
    Lambda: Optional[float] = None

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.w


def project_ball(w: np.ndarray, Lambda: float) -> np.ndarray:
    """Radial projection onto the l2 ball of radius Lambda (idempotent)."""
    norm = float(np.linalg.norm(w))
    if norm <= Lambda:
        return w
    return w * (Lambda / norm)


def weighted_ridge(X, y, q, ridge: Union[float, str] = "auto",
                   Lambda: Optional[float] = None,
                   project: bool = False) -> LinearHypothesis:
    """Minimize sum_i q_i (<w,x_i> - y_i)^2 + ridge*||w||^2.

    Solves the normal equations (X^T Q X + ridge*I) w = X^T Q y through
    the eigendecomposition of the symmetric system matrix.  ridge="auto"
    uses the scale-aware floor 1e-6 * tr(X^T Q X)/d.  With project=True
    the solution is radially projected onto the Lambda-ball afterwards.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    if X.shape[0] == 0:
        raise InvalidInputError("empty sample")
    if y.shape != (X.shape[0],) or q.shape != (X.shape[0],):
        raise InvalidInputError("labels/weights must match the sample size")
    d = X.shape[1]
    A = (X.T * q) @ X
    b = X.T @ (q * y)
    if ridge == "auto":
        ridge = 1e-6 * float(np.trace(A)) / d
    if ridge < 0:
        raise InvalidParameterError(f"ridge must be >= 0, got {ridge}")
    lam, vec = linalg.eigh(A + ridge * np.eye(d))
    scale = max(lam[0], 1.0)
    if lam[-1] <= _RANK_TOL * scale:
        raise RankDeficientError(
            f"system matrix is rank deficient (min eigenvalue {lam[-1]:.3e}); "
            "use a positive ridge"
        )
    w = vec @ ((vec.T @ b) / lam)
    if project:
        if Lambda is None or Lambda <= 0:
            raise InvalidParameterError("projection requires a positive Lambda")
        w = project_ball(w, Lambda)
    return LinearHypothesis(w=w, Lambda=Lambda)


def mse(h: LinearHypothesis, X, y) -> float:
    """Mean squared error on a labeled sample."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise InvalidInputError("empty sample")
    r = h.predict(X) - y
    return float(np.mean(r * r))


def weighted_loss(h: LinearHypothesis, X, y, q) -> float:
    """q-weighted squared error on the source sample."""
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    if y.size == 0:
        raise InvalidInputError("empty sample")
    r = h.predict(X) - y
    return float(np.dot(q, r * r))
