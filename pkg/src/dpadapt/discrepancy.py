"""Weighted discrepancy between a reweighted source sample and a target sample.

Builds the affine matrix map M(q) = M0 - sum_i q_i x_i x_i^T from data and
evaluates the exact discrepancy 4*Lambda^2*||M(q)||_2, its spectral-softmax
smoothings (one-sided F, two-sided F_tilde with optional l2 regularization)
and the p-norm smoothing G, together with their gradients and the constants
governing their smoothness, sensitivity and Lipschitz behavior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import InvalidInputError, InvalidParameterError

# Tolerances for weight-vector construction.
_SUM_TOL = 1e-6
_NEG_TOL = 1e-9


def weight_vector(q) -> np.ndarray:
    """Validate and renormalize a point on the probability simplex.

    Components below -1e-9 are rejected; smaller negative values are
    clamped to zero.  The sum must already be within 1e-6 of one; the
    vector is then renormalized exactly.
    """
    v = np.asarray(q, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError("weight vector must be a nonempty 1-d array")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("weight vector contains non-finite entries")
    if np.min(v) < -_NEG_TOL:
        raise InvalidInputError(f"negative weight {np.min(v)} below tolerance")
    v = np.clip(v, 0.0, None)
    s = v.sum()
    if abs(s - 1.0) > _SUM_TOL:
        raise InvalidInputError(f"weights sum to {s}, expected 1 within {_SUM_TOL}")
    return v / s


@dataclass(frozen=True)
class DiscrepancyModel:
    """Precomputed quantities shared by all discrepancy evaluations.

    M0 is the empirical second-moment matrix of the target sample; the
    source outer products x_i x_i^T are never materialized, gradient
    components are computed as quadratic forms instead.
    """

    source_points: np.ndarray  # (m, d)
    M0: np.ndarray             # (d, d)
    n: int                     # target sample size behind M0
    r: float                   # domain radius bound
    r_hat: float               # max source point norm

    @property
    def m(self) -> int:
        return self.source_points.shape[0]

    @property
    def dim(self) -> int:
        return self.source_points.shape[1]


def build_model(source_X, target_X, r: float) -> DiscrepancyModel:
    """Construct a DiscrepancyModel from raw samples.

    r is the feature-space radius bound and must dominate every observed
    point norm (up to 1e-12 slack).
    """
    X = np.atleast_2d(np.asarray(source_X, dtype=float))
    T = np.atleast_2d(np.asarray(target_X, dtype=float))
    if X.size == 0 or T.size == 0:
        raise InvalidInputError("source and target samples must be nonempty")
    if X.shape[1] != T.shape[1]:
        raise InvalidInputError(
            f"dimension mismatch: source d={X.shape[1]}, target d={T.shape[1]}"
        )
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(T))):
        raise InvalidInputError("samples contain non-finite values")
    if r <= 0:
        raise InvalidParameterError(f"r must be positive, got {r}")
    src_norms = np.linalg.norm(X, axis=1)
    tgt_norms = np.linalg.norm(T, axis=1)
    for name, norms in (("source", src_norms), ("target", tgt_norms)):
        bad = np.nonzero(norms > r + 1e-12)[0]
        if bad.size:
            raise InvalidInputError(
                f"{name} point {bad[0]} has norm {norms[bad[0]]:.6g} > r={r}"
            )
    M0 = (T.T @ T) / T.shape[0]
    return DiscrepancyModel(
        source_points=X, M0=linalg.symmetrize(M0), n=T.shape[0],
        r=float(r), r_hat=float(src_norms.max()),
    )


def weight_matrix(model: DiscrepancyModel, q) -> np.ndarray:
    """M(q) = M0 - sum_i q_i x_i x_i^T."""
    q = np.asarray(q, dtype=float)
    if q.shape != (model.m,):
        raise InvalidInputError(f"expected {model.m} weights, got {q.shape}")
    X = model.source_points
    return model.M0 - (X.T * q) @ X


def exact_discrepancy(model: DiscrepancyModel, q, Lambda: float) -> float:
    """4*Lambda^2 * ||M(q)||_2, the exact weighted discrepancy."""
    if Lambda <= 0:
        raise InvalidParameterError(f"Lambda must be positive, got {Lambda}")
    return 4.0 * Lambda**2 * linalg.spectral_norm(weight_matrix(model, q))


def softmax_F(model: DiscrepancyModel, q, mu: float) -> float:
    """One-sided spectral softmax (1/mu) log Tr exp(mu*M(q))."""
    return linalg.log_trace_exp(weight_matrix(model, q), mu)


def grad_softmax_F(model: DiscrepancyModel, q, mu: float) -> np.ndarray:
    """Gradient of softmax_F: component j is -x_j^T W x_j with the
    normalized matrix exponential W."""
    W = linalg.exp_weights(weight_matrix(model, q), mu)
    X = model.source_points
    return -np.einsum("ij,jk,ik->i", X, W, X)


def _two_sided_parts(model: DiscrepancyModel, q, mu: float):
    """Shared eigen-machinery for the two-sided softmax.

    Returns (value_without_reg, B, denom) where the gradient quadratic
    form is -x^T B x / denom.  Both exponentials are shifted by the same
    s = mu*max(lam_max, -lam_min) so neither overflows; the shift cancels
    in the ratio and is added back to the value.
    """
    lam, vec = linalg.eigh(weight_matrix(model, q))
    s = mu * max(lam[0], -lam[-1])
    e_plus = np.exp(mu * lam - s)
    e_minus = np.exp(-mu * lam - s)
    denom = e_plus.sum() + e_minus.sum()
    value = s / mu + np.log(denom) / mu
    B = (vec * (e_plus - e_minus)) @ vec.T
    return value, B, denom


def tilde_F(model: DiscrepancyModel, q, mu: float, lam: float = 0.0) -> float:
    """Two-sided softmax of the discrepancy plus (lam/2)*||q||_2^2."""
    if mu <= 0:
        raise InvalidParameterError(f"mu must be positive, got {mu}")
    if lam < 0:
        raise InvalidParameterError(f"lambda must be nonnegative, got {lam}")
    q = np.asarray(q, dtype=float)
    value, _, _ = _two_sided_parts(model, q, mu)
    return float(value + 0.5 * lam * np.dot(q, q))


def grad_tilde_F(model: DiscrepancyModel, q, mu: float, lam: float = 0.0) -> np.ndarray:
    """Gradient of tilde_F, from the block-diagonal form of the two-sided
    softmax: component j is -x_j^T (A+ - A-) x_j / (Tr A+ + Tr A-) + lam*q_j."""
    if mu <= 0:
        raise InvalidParameterError(f"mu must be positive, got {mu}")
    if lam < 0:
        raise InvalidParameterError(f"lambda must be nonnegative, got {lam}")
    q = np.asarray(q, dtype=float)
    _, B, denom = _two_sided_parts(model, q, mu)
    X = model.source_points
    quad = np.einsum("ij,jk,ik->i", X, B, X)
    return -quad / denom + lam * q


def pnorm_G(model: DiscrepancyModel, q, p: int) -> float:
    """p-norm smoothing Tr[M(q)^{2p}]^{1/p}, computed via eigenvalues."""
    if p < 1 or int(p) != p:
        raise InvalidParameterError(f"p must be an integer >= 1, got {p}")
    lam, _ = linalg.eigh(weight_matrix(model, q))
    t = float(np.sum(lam ** (2 * p)))
    return t ** (1.0 / p)


def grad_pnorm_G(model: DiscrepancyModel, q, p: int) -> np.ndarray:
    """Gradient of pnorm_G: -2 <M^{2p-1}, M_j> * Tr[M^{2p}]^{1/p - 1}."""
    if p < 1 or int(p) != p:
        raise InvalidParameterError(f"p must be an integer >= 1, got {p}")
    lam, vec = linalg.eigh(weight_matrix(model, q))
    t = float(np.sum(lam ** (2 * p)))
    if t == 0.0:
        return np.zeros(model.m)
    Mp = (vec * lam ** (2 * p - 1)) @ vec.T
    X = model.source_points
    quad = np.einsum("ij,jk,ik->i", X, Mp, X)
    return -2.0 * quad * t ** (1.0 / p - 1.0)


def theory_constants(model: DiscrepancyModel, mu: float) -> dict:
    """Smoothness, gradient sensitivity and Lipschitz constants of the
    softmax objectives on this model."""
    if mu <= 0:
        raise InvalidParameterError(f"mu must be positive, got {mu}")
    r, rh = model.r, model.r_hat
    return {
        "smoothness_q": mu * rh**4,
        "sensitivity": 2.0 * mu * r**2 * rh**2 / model.n,
        "lipschitz": rh**2,
    }
