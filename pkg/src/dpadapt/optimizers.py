"""Private optimizers over the simplex and product domains.

Three algorithms: noisy Frank-Wolfe and noisy mirror descent for the
regularized two-sided softmax discrepancy, and a generic private
Frank-Wolfe that approximates stationary points of a smooth nonconvex
objective over a polyhedron-times-ball product domain.  Noise scales
follow the advanced-composition closed forms verbatim; passing
sigma_override=0 turns every algorithm into its exact non-private
counterpart.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import discrepancy as disc
from .errors import InvalidParameterError, ProxConvergenceError
from .mechanisms import PrivacyBudget, RandomStream, gaussian_sample_vec, report_noisy_min

K_CAP = 10**6


@dataclass
class TraceRecord:
    k: int
    objective: float
    gap_q: float
    gap_w: float
    selected_vertex: int


def write_trace_csv(trace: list[TraceRecord], path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["k", "objective", "gap_q", "gap_w", "selected_vertex"])
        for t in trace:
            w.writerow([t.k, repr(t.objective), repr(t.gap_q), repr(t.gap_w),
                        t.selected_vertex])


@dataclass
class FWConfig:
    K: int
    mu: float
    lam: float
    budget: Optional[PrivacyBudget] = None
    sigma_override: Optional[float] = None
    return_penultimate: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise InvalidParameterError(f"K must be >= 1, got {self.K}")
        if self.mu <= 0:
            raise InvalidParameterError(f"mu must be positive, got {self.mu}")
        if self.lam < 0:
            raise InvalidParameterError(f"lambda must be >= 0, got {self.lam}")


@dataclass
class MDConfig:
    K: int
    mu: float
    lam: float
    budget: Optional[PrivacyBudget] = None
    p: Optional[float] = None      # defaults to 1 + 1/log(m)
    eta: Optional[float] = None    # defaults to the closed-form schedule
    sigma_override: Optional[float] = None

    def __post_init__(self):
        if self.K < 1:
            raise InvalidParameterError(f"K must be >= 1, got {self.K}")
        if self.mu <= 0:
            raise InvalidParameterError(f"mu must be positive, got {self.mu}")
        if self.p is not None and self.p <= 1:
            raise InvalidParameterError(f"p must be > 1, got {self.p}")
        if self.eta is not None and self.eta <= 0:
            raise InvalidParameterError(f"eta must be positive, got {self.eta}")


def fw_noise_scale(model: disc.DiscrepancyModel, mu: float,
                   budget: PrivacyBudget, K: int) -> float:
    """Laplace scale for noisy Frank-Wolfe:
    4*mu*r^2*rhat^2*sqrt(2K log(1/delta)) / (n*eps)."""
    if budget.noiseless:
        return 0.0
    return (4.0 * mu * model.r**2 * model.r_hat**2
            * math.sqrt(2.0 * K * math.log(1.0 / budget.delta))
            / (model.n * budget.epsilon))


def md_noise_scale(model: disc.DiscrepancyModel, mu: float,
                   budget: PrivacyBudget, K: int) -> float:
    """Gaussian sigma for noisy mirror descent:
    4*mu*r^2*rhat^2*sqrt(2Km log(1/delta)) / (n*eps)."""
    if budget.noiseless:
        return 0.0
    return (4.0 * mu * model.r**2 * model.r_hat**2
            * math.sqrt(2.0 * K * model.m * math.log(1.0 / budget.delta))
            / (model.n * budget.epsilon))


def md_step_size(model: disc.DiscrepancyModel, lam: float, K: int) -> float:
    """Mirror-descent step size (2/(rhat^2+lam)) * sqrt(log(m)/K)."""
    return 2.0 / (model.r_hat**2 + lam) * math.sqrt(math.log(model.m) / K)


def noisy_frank_wolfe(model: disc.DiscrepancyModel, cfg: FWConfig,
                      rng: RandomStream,
                      trace: Optional[list[TraceRecord]] = None) -> np.ndarray:
    """Noisy Frank-Wolfe on the regularized two-sided softmax discrepancy.

    Per round: report-noisy-min over the m coordinate gradients selects a
    simplex vertex; the iterate moves with step 3/(k+2).  Returns the last
    computed iterate (or the one before it with return_penultimate, since
    the algorithm's stated return index is ambiguous by one).
    """
    if cfg.sigma_override is not None:
        sigma = cfg.sigma_override
    else:
        sigma = fw_noise_scale(model, cfg.mu, cfg.budget, cfg.K)
    q = np.full(model.m, 1.0 / model.m)
    prev = q
    for k in range(1, cfg.K + 1):
        g = disc.grad_tilde_F(model, q, cfg.mu, cfg.lam)
        j, _ = report_noisy_min(g, sigma, rng)
        if trace is not None:
            gap = float(np.dot(g, q) - g[j])
            trace.append(TraceRecord(k, disc.tilde_F(model, q, cfg.mu, cfg.lam),
                                     gap, 0.0, j))
        eta_k = 3.0 / (k + 2.0)
        prev = q
        q = (1.0 - eta_k) * q
        q[j] += eta_k
    return prev if cfg.return_penultimate else q


def default_fw_params(model: disc.DiscrepancyModel, budget: PrivacyBudget,
                      beta: float) -> tuple[int, float]:
    """Closed-form (K, mu) for noisy Frank-Wolfe:

    K  = rhat^{4/3} (eps*n)^{2/3}
         / (3 r^{4/3} log^{1/3}(1/delta) log^{2/3}(n) log^{2/3}(mn/beta))
    mu = sqrt(K log(m+n) / (8 rhat^4)),

    with K rounded to the nearest integer and clamped to [1, 10^6]; mu
    uses the returned K.
    """
    if model.n < 2:
        raise InvalidParameterError("n must be >= 2 for the log terms")
    if budget.noiseless:
        raise InvalidParameterError("calibration needs a finite epsilon")
    K_raw = (model.r_hat ** (4.0 / 3.0) * (budget.epsilon * model.n) ** (2.0 / 3.0)
             / (3.0 * model.r ** (4.0 / 3.0)
                * math.log(1.0 / budget.delta) ** (1.0 / 3.0)
                * math.log(model.n) ** (2.0 / 3.0)
                * math.log(model.m * model.n / beta) ** (2.0 / 3.0)))
    K = int(min(max(round(K_raw), 1), K_CAP))
    mu = math.sqrt(K * math.log(model.m + model.n) / (8.0 * model.r_hat**4))
    return K, mu


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    return np.clip(v - theta, 0.0, None)


def _pnorm_prox_inner(q_k, g, ct: float, p: float) -> np.ndarray:
    """Minimize <g, q> + (ct/p) * sum_i |q_i - q_k_i|^p over the simplex.

    KKT: unclamped coordinates satisfy z_i = xi((nu - g_i)/(ct)) with
    xi(s) = sign(s)|s|^{1/(p-1)}, clamped ones sit at q_i = 0; the
    multiplier nu is found by safeguarded Newton on the (monotone)
    coordinate-sum constraint.
    """
    inv = 1.0 / (p - 1.0)

    def q_of(nu):
        s = (nu - g) / ct
        z = np.sign(s) * np.abs(s) ** inv
        return np.maximum(q_k + z, 0.0)

    lo = float(np.min(g - ct * q_k ** (p - 1.0)))   # all coordinates clamped
    hi = float(np.max(g))                           # sum >= sum(q_k) = 1
    nu = 0.5 * (lo + hi)
    for _ in range(120):
        s = (nu - g) / ct
        z = np.sign(s) * np.abs(s) ** inv
        active = q_k + z > 0.0
        total = float(np.sum((q_k + z)[active]))
        if total > 1.0:
            hi = nu
        else:
            lo = nu
        err = total - 1.0
        width = hi - lo
        if abs(err) <= 1e-14 or width <= 1e-16 * max(1.0, abs(nu)):
            break
        deriv = float(np.sum(np.abs(s[active]) ** (inv - 1.0))) * inv / ct
        step = err / deriv if deriv > 0 and np.isfinite(deriv) else 0.0
        nu_new = nu - step
        if not (lo < nu_new < hi):
            nu_new = 0.5 * (lo + hi)
        nu = nu_new
    q = q_of(nu)
    t = float(np.sum(q))
    return q / t if t > 0 else q


def pnorm_prox(q_k, g, eta: float, p: float,
               tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Prox step of mirror descent over the simplex:

        argmin_q  <g, q - q_k> + ||q - q_k||_p^2 / (eta (p-1)).

    At a minimizer the gradient matches that of the separable surrogate
    <g, q> + (c*t/p) * sum |q_i - q_k_i|^p at t = ||q - q_k||_p^{2-p}
    (c = 2/(eta (p-1))), so the solution is the fixed point of
    t -> ||z(t)||_p^{2-p} over solutions of the surrogate, found by
    bisection on the bracketing interval (0, 2^{2-p}] (||z||_p <= 2 on
    the simplex).
    """
    if eta <= 0:
        raise InvalidParameterError(f"eta must be positive, got {eta}")
    if p <= 1 or p > 2:
        raise InvalidParameterError(f"p must be in (1, 2], got {p}")
    q_k = np.asarray(q_k, dtype=float)
    g = np.asarray(g, dtype=float)
    if not np.any(g - g[0]):
        # constant gradient: every feasible direction is equivalent
        return q_k.copy()
    c = 2.0 / (eta * (p - 1.0))

    def h(t):
        z = _pnorm_prox_inner(q_k, g, c * t, p) - q_k
        return float(np.linalg.norm(z, p)) ** (2.0 - p) - t

    t_lo, t_hi = 1e-14, 2.0 ** (2.0 - p)
    h_lo = h(t_lo)
    if h_lo <= 0.0:
        # the optimal move is numerically zero
        return q_k.copy()
    h_hi = h(t_hi)   # <= 0 always since ||z||_p <= 2
    # safeguarded regula falsi (Illinois variant)
    side = 0
    for _ in range(max_iter):
        t_mid = (t_lo * h_hi - t_hi * h_lo) / (h_hi - h_lo)
        if not (t_lo < t_mid < t_hi):
            t_mid = 0.5 * (t_lo + t_hi)
        h_mid = h(t_mid)
        if h_mid == 0.0 or t_hi - t_lo <= tol * t_hi:
            return _pnorm_prox_inner(q_k, g, c * t_mid, p)
        if h_mid > 0.0:
            t_lo, h_lo = t_mid, h_mid
            if side == 1:
                h_hi *= 0.5
            side = 1
        else:
            t_hi, h_hi = t_mid, h_mid
            if side == -1:
                h_lo *= 0.5
            side = -1
    raise ProxConvergenceError(t_hi - t_lo, max_iter)


def noisy_mirror_descent(model: disc.DiscrepancyModel, cfg: MDConfig,
                         rng: RandomStream,
                         trace: Optional[list[TraceRecord]] = None) -> np.ndarray:
    """Noisy mirror descent on the regularized two-sided softmax
    discrepancy.  Gaussian-perturbed gradients feed a p-norm prox update
    with p = 1 + 1/log(m); returns the average iterate."""
    m = model.m
    # default p = 1 + 1/log(m) exceeds 2 for m = 2; the prox (and the
    # strong-convexity argument behind it) needs p <= 2
    p = cfg.p if cfg.p is not None else min(2.0, 1.0 + 1.0 / math.log(m))
    eta = cfg.eta if cfg.eta is not None else md_step_size(model, cfg.lam, cfg.K)
    if cfg.sigma_override is not None:
        sigma = cfg.sigma_override
    else:
        sigma = md_noise_scale(model, cfg.mu, cfg.budget, cfg.K)
    q = np.full(m, 1.0 / m)
    acc = np.zeros(m)
    for k in range(1, cfg.K + 1):
        acc += q
        g = disc.grad_tilde_F(model, q, cfg.mu, cfg.lam)
        g_hat = g + gaussian_sample_vec(m, sigma, rng) if sigma > 0 else g
        if trace is not None:
            gap = float(np.dot(g, q) - np.min(g))
            trace.append(TraceRecord(k, disc.tilde_F(model, q, cfg.mu, cfg.lam),
                                     gap, 0.0, -1))
        q = pnorm_prox(q, g_hat, eta, p)
    return acc / cfg.K


def default_md_params(model: disc.DiscrepancyModel, budget: PrivacyBudget,
                      beta: float, lam: float) -> tuple[int, float]:
    """Closed-form (K, mu) for noisy mirror descent.  mu is computed
    first, then K from it:

    mu = sqrt(eps*n) log^{1/4}(m+n)
         / (4 r rhat sqrt((lam+rhat^2) log(2m/beta)) (m log(1/delta))^{1/4})
    K  = (rhat^2+lam)^2 eps^2 n^2
         / (128 mu^2 rhat^4 r^4 m log(2m/beta) log(1/delta)),

    with K rounded and clamped as in default_fw_params.
    """
    if model.n < 2:
        raise InvalidParameterError("n must be >= 2 for the log terms")
    if budget.noiseless:
        raise InvalidParameterError("calibration needs a finite epsilon")
    m, n = model.m, model.n
    r, rh = model.r, model.r_hat
    mu = (math.sqrt(budget.epsilon * n) * math.log(m + n) ** 0.25
          / (4.0 * r * rh * math.sqrt((lam + rh**2) * math.log(2.0 * m / beta))
             * (m * math.log(1.0 / budget.delta)) ** 0.25))
    K_raw = ((rh**2 + lam) ** 2 * budget.epsilon**2 * n**2
             / (128.0 * mu**2 * rh**4 * r**4 * m
                * math.log(2.0 * m / beta) * math.log(1.0 / budget.delta)))
    K = int(min(max(round(K_raw), 1), K_CAP))
    return K, mu


@dataclass
class SmoothnessProfile:
    gamma_q: float
    gamma_w: float
    mu_q: float
    mu_w: float
    gamma_qw: float
    D_q: float
    D_w: float
    tau_q: float
    tau_w: float

    def __post_init__(self):
        for name, v in vars(self).items():
            if v < 0:
                raise InvalidParameterError(f"{name} must be >= 0, got {v}")

    def default_eta(self, K: int) -> float:
        """Step size balancing the stationarity-gap bound:
        sqrt(2(Dq*gq + Dw*gw) / ((Dq^2 mu_q + Dw^2 mu_w + 2 g_qw Dq Dw) K))."""
        num = 2.0 * (self.D_q * self.gamma_q + self.D_w * self.gamma_w)
        den = (self.D_q**2 * self.mu_q + self.D_w**2 * self.mu_w
               + 2.0 * self.gamma_qw * self.D_q * self.D_w) * K
        return math.sqrt(num / den)


@dataclass
class ProductObjective:
    """Objective over a polyhedral q-domain times an l2 ball in w.

    vertices holds the J polyhedron vertices as rows; grad_q/grad_w must
    be deterministic for fixed inputs."""
    grad_q: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_w: Callable[[np.ndarray, np.ndarray], np.ndarray]
    vertices: np.ndarray
    w_dim: int
    w_radius: float
    profile: SmoothnessProfile
    value: Optional[Callable[[np.ndarray, np.ndarray], float]] = None


def stationary_noise_scales(profile: SmoothnessProfile, budget: PrivacyBudget,
                            K: int) -> tuple[float, float]:
    """Per-mechanism scales sigma_q (Laplace) and sigma_w (Gaussian):
    4*tau*sqrt(2K log(1/delta))/eps each."""
    if budget.noiseless:
        return 0.0, 0.0
    c = 4.0 * math.sqrt(2.0 * K * math.log(1.0 / budget.delta)) / budget.epsilon
    return c * profile.tau_q, c * profile.tau_w


def private_stationary_fw(obj: ProductObjective, budget: PrivacyBudget,
                          K: int, eta: float, rng: RandomStream,
                          q0: Optional[np.ndarray] = None,
                          w0: Optional[np.ndarray] = None,
                          trace: Optional[list[TraceRecord]] = None):
    """Private Frank-Wolfe towards a stationary point of obj over the
    product domain.

    Each round selects a q-vertex by report-noisy-min and a w-direction
    by Gaussian-perturbed linear minimization over the ball, tracking
    per-round gap estimates; returns the iterate with the smallest
    estimated gap, its gap value, and the last iterate.  tau_w = 0 makes
    the w-path exactly noise-free (separate noise streams for q and w).
    """
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    if not (0 < eta <= 1):
        raise InvalidParameterError(f"eta must be in (0,1], got {eta}")
    sigma_q, sigma_w = stationary_noise_scales(obj.profile, budget, K)
    rng_q, rng_w = rng.child(0), rng.child(1)
    V = np.asarray(obj.vertices, dtype=float)
    q = V.mean(axis=0) if q0 is None else np.asarray(q0, float).copy()
    w = np.zeros(obj.w_dim) if w0 is None else np.asarray(w0, float).copy()
    best = (math.inf, None, None)
    for k in range(K):
        gq = obj.grad_q(q, w)
        gw = obj.grad_w(q, w)
        scores = V @ gq
        j, noisy = report_noisy_min(scores, sigma_q, rng_q)
        v_q = V[j]
        # noisy = <gq, v_j> + b_j, so this is -(<gq, v_j - q> + b_j)
        gap_q = -(noisy - float(np.dot(gq, q)))
        gw_hat = gw + gaussian_sample_vec(gw.size, sigma_w, rng_w) if sigma_w > 0 else gw
        norm = float(np.linalg.norm(gw_hat))
        u_w = w if norm == 0.0 else -obj.w_radius * gw_hat / norm
        gap_w = -float(np.dot(gw_hat, u_w - w))
        if trace is not None:
            val = obj.value(q, w) if obj.value is not None else math.nan
            trace.append(TraceRecord(k, val, gap_q, gap_w, j))
        if gap_q + gap_w < best[0]:
            best = (gap_q + gap_w, q.copy(), w.copy())
        q = (1.0 - eta) * q + eta * v_q
        w = (1.0 - eta) * w + eta * u_w
    gap_est, q_star, w_star = best
    return q_star, w_star, gap_est, (q, w)


def compute_gap(obj: ProductObjective, q, w) -> float:
    """Exact stationarity gap max_{v in domain} <-grad f, v - u>,
    split over the vertex set and the closed-form ball maximization.
    Diagnostic only, never used inside the private loop."""
    q = np.asarray(q, dtype=float)
    w = np.asarray(w, dtype=float)
    gq = obj.grad_q(q, w)
    gw = obj.grad_w(q, w)
    V = np.asarray(obj.vertices, dtype=float)
    gap_q = float(np.max(-(V @ gq)) + np.dot(gq, q))
    gap_w = float(np.linalg.norm(gw) * obj.w_radius + np.dot(gw, w))
    return gap_q + gap_w
