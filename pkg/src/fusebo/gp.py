"""Gaussian process regression with a squared-exponential kernel and constant mean.

The model is the standard noisy-observation GP: observations y = f(x) + e with
e ~ N(0, noise_var), prior f ~ GP(mean_const, k) where

    k(a, b) = kappa0 * exp(-||a - b||^2 / (2 h^2)).

Posterior prediction, the log marginal likelihood, its analytic gradient in
log-parameter space, and a multi-start quasi-Newton hyperparameter fit are all
provided.  Everything is exact dense linear algebra (Cholesky); the datasets
this package deals with are tiny (tens of points).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky
from scipy.optimize import minimize

logger = logging.getLogger(__name__)

# Diagonal loading starts at BASE_JITTER * kappa0 and is escalated by 10x per
# failed factorization, up to MAX_JITTER * kappa0.
BASE_JITTER = 1e-10
MAX_JITTER = 1e-4

NOISE_FLOOR = 1e-8


class GpNumericalError(RuntimeError):
    """Raised when the kernel matrix cannot be factorized even after jitter escalation."""

    def __init__(self, message: str, *, n_points: int | None = None,
                 jitter: float | None = None, diag_range: tuple[float, float] | None = None):
        super().__init__(message)
        self.n_points = n_points
        self.jitter = jitter
        self.diag_range = diag_range


@dataclass(frozen=True)
class GpHyperparams:
    """SE-kernel hyperparameters plus the constant prior mean.

    kappa0 and h must be positive; noise_var non-negative.  Fitting works in
    log-space so positivity is preserved automatically there.
    """

    kappa0: float
    h: float
    noise_var: float
    mean_const: float = 0.0

    def __post_init__(self):
        if not (self.kappa0 > 0):
            raise ValueError(f"kappa0 must be > 0, got {self.kappa0}")
        if not (self.h > 0):
            raise ValueError(f"h must be > 0, got {self.h}")
        if not (self.noise_var >= 0):
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")


@dataclass(frozen=True)
class Dataset:
    """Paired inputs (n, d) and scalar outputs (n,)."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.asarray(self.outputs, dtype=float).reshape(-1)
        if X.size == 0:
            X = X.reshape(0, X.shape[1] if X.ndim == 2 and X.shape[1] else 1)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"inputs ({X.shape[0]}) and outputs ({y.shape[0]}) lengths differ")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def append(self, x: np.ndarray, y: float) -> "Dataset":
        """Return a new Dataset with one more observation; self is untouched."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        if self.n and x.shape[1] != self.dim:
            raise ValueError(f"point dimension {x.shape[1]} != dataset dimension {self.dim}")
        return Dataset(np.vstack([self.inputs, x]) if self.n else x,
                       np.append(self.outputs, float(y)))


@dataclass(frozen=True)
class GaussianBelief:
    """Pointwise Gaussian posterior of the objective at a single query."""

    mean: float
    sd: float

    def __post_init__(self):
        if self.sd < 0:
            raise ValueError(f"sd must be >= 0, got {self.sd}")


def _sqdist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, shape (len(A), len(B))."""
    d = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def kernel_eval(a, b, hyper: GpHyperparams) -> float:
    """SE kernel kappa0 * exp(-||a-b||^2 / (2 h^2)) for two single points."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d2 = float(((a - b) ** 2).sum())
    return hyper.kappa0 * float(np.exp(-d2 / (2.0 * hyper.h ** 2)))


def kernel_matrix(A: np.ndarray, B: np.ndarray, hyper: GpHyperparams) -> np.ndarray:
    """Cross-covariance matrix between two point sets."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return hyper.kappa0 * np.exp(-_sqdist(A, B) / (2.0 * hyper.h ** 2))


def _factorize(K: np.ndarray, hyper: GpHyperparams) -> tuple[np.ndarray, float]:
    """Cholesky of K + noise_var*I + jitter*I with escalating jitter.

    Returns (lower factor, jitter actually used).  Raises GpNumericalError once
    the jitter ceiling is hit.
    """
    n = K.shape[0]
    jitter = BASE_JITTER * hyper.kappa0
    ceiling = MAX_JITTER * hyper.kappa0
    while True:
        try:
            L = cholesky(K + (hyper.noise_var + jitter) * np.eye(n),
                         lower=True, check_finite=False)
            return L, jitter
        except np.linalg.LinAlgError:
            pass
        if jitter >= ceiling:
            diag = np.diag(K)
            raise GpNumericalError(
                f"Cholesky failed for n={n} even with jitter {jitter:.3e}",
                n_points=n, jitter=jitter,
                diag_range=(float(diag.min()), float(diag.max())) if n else (0.0, 0.0))
        jitter *= 10.0


@dataclass(frozen=True)
class GpModel:
    """Immutable trained GP: hyperparameters plus factorized training state.

    factor is the lower Cholesky factor of K + (noise_var + jitter) I and
    alpha_vec = (K + noise_var I)^-1 (Y - mean_const).  Safe to share
    read-only across workers.
    """

    hyper: GpHyperparams
    data: Dataset
    factor: np.ndarray
    alpha_vec: np.ndarray
    jitter: float
    prec: np.ndarray  # (K + noise_var I + jitter I)^-1, cached for fast batch prediction


def fit_posterior(data: Dataset, hyper: GpHyperparams) -> GpModel:
    """Factorize the training covariance once so predictions are cheap.

    An empty dataset yields the prior model (predictions revert to the prior
    mean and sd sqrt(kappa0)).
    """
    n = data.n
    if n == 0:
        z = np.zeros((0, 0))
        return GpModel(hyper, data, z, np.zeros(0), 0.0, z)
    K = kernel_matrix(data.inputs, data.inputs, hyper)
    L, jitter = _factorize(K, hyper)
    resid = data.outputs - hyper.mean_const
    alpha = cho_solve((L, True), resid, check_finite=False)
    prec = cho_solve((L, True), np.eye(n), check_finite=False)
    return GpModel(hyper, data, L, alpha, jitter, prec)


def predict_batch(model: GpModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and standard deviations at many queries, shape (m,)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    hyper = model.hyper
    if model.data.n == 0:
        m = X.shape[0]
        return (np.full(m, hyper.mean_const),
                np.full(m, np.sqrt(hyper.kappa0)))
    if X.shape[1] != model.data.dim:
        raise ValueError(f"query dimension {X.shape[1]} != training dimension {model.data.dim}")
    Kx = kernel_matrix(model.data.inputs, X, hyper)  # (n, m)
    mean = hyper.mean_const + Kx.T @ model.alpha_vec
    quad = np.einsum("im,im->m", Kx, model.prec @ Kx)
    var = np.clip(hyper.kappa0 - quad, 0.0, hyper.kappa0)
    return mean, np.sqrt(var)


def predict(model: GpModel, x) -> GaussianBelief:
    """Posterior belief at a single query point."""
    mean, sd = predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1))
    return GaussianBelief(float(mean[0]), float(sd[0]))


def _nlml_and_grad(data: Dataset, hyper: GpHyperparams) -> tuple[float, np.ndarray]:
    """Negative log marginal likelihood and its gradient.

    Gradient order: (log kappa0, log h, log noise_var, mean_const).  The tiny
    base jitter is folded into the kappa0 derivative since it scales with
    kappa0.
    """
    X, y = data.inputs, data.outputs
    n = data.n
    sq = _sqdist(X, X)
    K = hyper.kappa0 * np.exp(-sq / (2.0 * hyper.h ** 2))
    L, jitter = _factorize(K, hyper)
    resid = y - hyper.mean_const
    alpha = cho_solve((L, True), resid, check_finite=False)
    logdet = 2.0 * np.log(np.diag(L)).sum()
    nlml = 0.5 * float(resid @ alpha) + 0.5 * logdet + 0.5 * n * np.log(2.0 * np.pi)

    Kinv = cho_solve((L, True), np.eye(n), check_finite=False)
    # d(logML)/dtheta = 0.5 tr((alpha alpha^T - Kinv) dK/dtheta)
    A = np.outer(alpha, alpha) - Kinv
    dK_dlogk = K + jitter * np.eye(n)
    dK_dlogh = K * sq / hyper.h ** 2
    g_logk = -0.5 * float((A * dK_dlogk).sum())
    g_logh = -0.5 * float((A * dK_dlogh).sum())
    g_lognoise = -0.5 * hyper.noise_var * float(np.trace(A))
    g_mean = -float(alpha.sum())
    return nlml, np.array([g_logk, g_logh, g_lognoise, g_mean])


def log_marginal_likelihood(data: Dataset, hyper: GpHyperparams) -> float:
    """log N(Y | mean_const * 1, K + noise_var * I)."""
    if data.n == 0:
        raise ValueError("log marginal likelihood of an empty dataset is undefined")
    nlml, _ = _nlml_and_grad(data, hyper)
    return -nlml


def nlml_gradient(data: Dataset, hyper: GpHyperparams) -> np.ndarray:
    """Gradient of the negative log marginal likelihood.

    Components follow (log kappa0, log h, log noise_var, mean_const); the
    noise component requires noise_var > 0 (use the fitting floor).
    """
    if data.n == 0:
        raise ValueError("gradient of an empty dataset is undefined")
    _, grad = _nlml_and_grad(data, hyper)
    return grad


@dataclass(frozen=True)
class FitConfig:
    """Settings for the multi-start NLML minimization.

    domain_diameter anchors the bandwidth bounds
    (log h in [log(0.01 D), log(10 D)]); when None it is inferred from the
    spread of the training inputs.
    """

    n_restarts: int = 5
    seed: int = 0
    rng: np.random.Generator | None = None
    maxiter: int = 150
    domain_diameter: float | None = None
    log_kappa_bounds: tuple[float, float] = (-6.0, 6.0)
    log_noise_bounds: tuple[float, float] = (-12.0, 2.0)

    def make_rng(self) -> np.random.Generator:
        return self.rng if self.rng is not None else np.random.default_rng(self.seed)


def _h_bounds(data: Dataset, config: FitConfig) -> tuple[float, float]:
    D = config.domain_diameter
    if D is None:
        span = data.inputs.max(axis=0) - data.inputs.min(axis=0)
        D = float(np.linalg.norm(span))
    if not (D > 0):
        D = 1.0
    return np.log(0.01 * D), np.log(10.0 * D)


def fit_hyperparams(data: Dataset, init: GpHyperparams, config: FitConfig | None = None) -> GpHyperparams:
    """Minimize the NLML over (log kappa0, log h, log noise_var, mean_const).

    Runs L-BFGS-B from the supplied init plus n_restarts seeded random starts
    and returns the best point found.  Datasets with fewer than two points
    return init unchanged.  If every start fails numerically, the best
    feasible point evaluated anywhere is returned with a warning.
    """
    if config is None:
        config = FitConfig()
    if data.n < 2:
        return init

    lh_lo, lh_hi = _h_bounds(data, config)
    lk_lo, lk_hi = config.log_kappa_bounds
    ls_lo, ls_hi = config.log_noise_bounds
    bounds = [(lk_lo, lk_hi), (lh_lo, lh_hi), (ls_lo, ls_hi), (None, None)]

    def clip_theta(theta: np.ndarray) -> np.ndarray:
        t = theta.copy()
        t[0] = np.clip(t[0], lk_lo, lk_hi)
        t[1] = np.clip(t[1], lh_lo, lh_hi)
        t[2] = np.clip(t[2], ls_lo, ls_hi)
        return t

    best: dict = {"nlml": np.inf, "theta": None}

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        hyper = GpHyperparams(float(np.exp(theta[0])), float(np.exp(theta[1])),
                              float(np.exp(theta[2])), float(theta[3]))
        try:
            nlml, grad = _nlml_and_grad(data, hyper)
        except GpNumericalError:
            return 1e25, np.zeros(4)
        if not np.isfinite(nlml):
            return 1e25, np.zeros(4)
        if nlml < best["nlml"]:
            best["nlml"] = nlml
            best["theta"] = theta.copy()
        return nlml, grad

    y = data.outputs
    theta0 = clip_theta(np.array([
        np.log(init.kappa0),
        np.log(init.h),
        np.log(max(init.noise_var, NOISE_FLOOR)),
        init.mean_const,
    ]))

    rng = config.make_rng()
    starts = [theta0]
    for _ in range(config.n_restarts):
        starts.append(np.array([
            rng.uniform(max(lk_lo, -4.0), min(lk_hi, 4.0)),
            rng.uniform(lh_lo, lh_hi),
            rng.uniform(max(ls_lo, -10.0), min(ls_hi, 0.0)),
            float(np.mean(y)),
        ]))

    any_success = False
    for theta_start in starts:
        try:
            minimize(objective, theta_start, jac=True, method="L-BFGS-B",
                     bounds=bounds, options={"maxiter": config.maxiter})
            any_success = True
        except (GpNumericalError, np.linalg.LinAlgError):
            continue

    if best["theta"] is None:
        raise GpNumericalError("NLML was not finite at any evaluated point", n_points=data.n)
    if not any_success:
        logger.warning("all NLML restarts failed numerically; returning best evaluated point")

    theta = clip_theta(best["theta"])
    return GpHyperparams(float(np.exp(theta[0])), float(np.exp(theta[1])),
                         float(np.exp(theta[2])), float(theta[3]))


def default_init(data: Dataset, domain_diameter: float | None = None) -> GpHyperparams:
    """Scale-aware starting hyperparameters for fit_hyperparams."""
    y = data.outputs
    var = float(np.var(y)) if data.n > 1 else 1.0
    kappa0 = max(var, 1e-2)
    if domain_diameter is None:
        span = data.inputs.max(axis=0) - data.inputs.min(axis=0) if data.n else np.array([1.0])
        domain_diameter = float(np.linalg.norm(span)) or 1.0
    return GpHyperparams(kappa0=kappa0, h=max(0.2 * domain_diameter, 1e-6),
                         noise_var=max(1e-6 * kappa0, NOISE_FLOOR),
                         mean_const=float(np.mean(y)) if data.n else 0.0)
