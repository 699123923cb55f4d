"""Upper-confidence-bound acquisition and a CMA-ES maximizer over box domains.

The UCB score is mean + sqrt_beta * sd, evaluated either on a plain GP belief
or on the fused posterior.  The exploration factor follows a BetaSchedule:
constant by default, or an optional slowly growing rule
sqrt(2 log(d t^2 pi^2 / (6 delta))).

The inner-loop maximizer is a standard (mu/mu_w, lambda) CMA-ES with rank-one
and rank-mu covariance updates and cumulative step-size adaptation, started
at the domain center.  Objectives are evaluated on whole populations at once:
objective(X) takes an (m, d) array and returns (m,) values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fusion import FusedBelief
from .gp import GaussianBelief


@dataclass(frozen=True)
class BetaSchedule:
    """Exploration schedule producing sqrt(beta_t) > 0 for every t >= 1."""

    kind: str = "constant"
    value: float = 2.0
    delta: float = 0.1
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("constant", "log_growth"):
            raise ValueError(f"unknown beta schedule kind: {self.kind!r}")
        if self.kind == "constant" and not (self.value > 0):
            raise ValueError("constant sqrt(beta) must be positive")
        if self.kind == "log_growth" and not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")

    @classmethod
    def constant(cls, value: float = 2.0) -> "BetaSchedule":
        return cls(kind="constant", value=value)

    @classmethod
    def log_growth(cls, dim: int, delta: float = 0.1) -> "BetaSchedule":
        return cls(kind="log_growth", delta=delta, dim=dim)

    def sqrt_beta(self, t: int) -> float:
        if t < 1:
            raise ValueError(f"iteration index must be >= 1, got {t}")
        if self.kind == "constant":
            return self.value
        return math.sqrt(2.0 * math.log(self.dim * t * t * math.pi ** 2 / (6.0 * self.delta)))


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box with finite bounds, lower < upper componentwise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("lower and upper must be equal-length, non-empty vectors")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("domain bounds must be finite")
        if not (lo < hi).all():
            raise ValueError("lower must be strictly below upper in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return ((X >= self.lower) & (X <= self.upper)).all(axis=1)

    def clip(self, X: np.ndarray) -> np.ndarray:
        return np.clip(X, self.lower, self.upper)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))


def ucb(belief: GaussianBelief, sqrt_beta: float) -> float:
    """mean + sqrt_beta * sd of a plain GP belief."""
    if sqrt_beta < 0:
        raise ValueError(f"sqrt_beta must be >= 0, got {sqrt_beta}")
    return belief.mean + sqrt_beta * belief.sd


def regularized_ucb(fused: FusedBelief, sqrt_beta: float) -> float:
    """mean + sqrt_beta * sd of a fused posterior."""
    if sqrt_beta < 0:
        raise ValueError(f"sqrt_beta must be >= 0, got {sqrt_beta}")
    return fused.mean + sqrt_beta * fused.sd


def default_population_size(dim: int) -> int:
    return 4 + int(3 * math.log(dim))


def maximize(objective, domain: BoxDomain, budget: int,
             rng: np.random.Generator, popsize: int | None = None) -> tuple[np.ndarray, float]:
    """CMA-ES maximization of a black-box objective over a box.

    objective must accept an (m, d) array and return (m,) values; non-finite
    values are treated as -inf and the candidates discarded from selection.
    Returns the best point ever evaluated, which always lies inside the box.
    The run is deterministic given (rng seed, domain, budget, popsize).
    """
    n = domain.dim
    lam = popsize if popsize is not None else default_population_size(n)
    if lam < 2:
        raise ValueError("population size must be at least 2")
    if budget < lam:
        raise ValueError(f"budget {budget} is below the population size {lam}")

    mu = lam // 2
    raw = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mu_eff = 1.0 / float((weights ** 2).sum())

    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n)
    c_1 = 2.0 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) ** 2 + mu_eff))
    chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))

    mean = domain.center.copy()
    sigma = 0.3 * domain.diagonal / math.sqrt(n)
    C = np.eye(n)
    p_sigma = np.zeros(n)
    p_c = np.zeros(n)
    B = np.eye(n)
    D = np.ones(n)

    best_x = mean.copy()
    best_f = -np.inf
    n_gen = budget // lam

    for gen in range(n_gen):
        # Sample the population; out-of-bounds candidates are redrawn a few
        # times, stragglers are clipped to the box.
        Z = rng.standard_normal((lam, n))
        X = mean + sigma * (Z @ (B * D).T)
        for _ in range(10):
            bad = ~domain.contains(X)
            if not bad.any():
                break
            Zb = rng.standard_normal((int(bad.sum()), n))
            X[bad] = mean + sigma * (Zb @ (B * D).T)
        X = domain.clip(X)

        f = np.asarray(objective(X), dtype=float).reshape(-1)
        f = np.where(np.isfinite(f), f, -np.inf)

        gen_best = int(np.argmax(f))
        if f[gen_best] > best_f:
            best_f = float(f[gen_best])
            best_x = X[gen_best].copy()

        if not np.isfinite(f).any():
            continue  # nothing usable this generation; spend budget and move on

        order = np.argsort(-f, kind="stable")[:mu]
        Y = (X[order] - mean) / sigma  # displacement of the clipped, evaluated points
        y_w = weights @ Y
        mean = mean + sigma * y_w

        inv_sqrt_C = B @ np.diag(1.0 / D) @ B.T
        p_sigma = (1.0 - c_sigma) * p_sigma + math.sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) * (inv_sqrt_C @ y_w)
        norm_ps = float(np.linalg.norm(p_sigma))
        h_sig = 1.0 if norm_ps / math.sqrt(1.0 - (1.0 - c_sigma) ** (2 * (gen + 1))) < (1.4 + 2.0 / (n + 1.0)) * chi_n else 0.0
        p_c = (1.0 - c_c) * p_c + h_sig * math.sqrt(c_c * (2.0 - c_c) * mu_eff) * y_w

        rank_mu = (Y.T * weights) @ Y
        delta_h = (1.0 - h_sig) * c_c * (2.0 - c_c)
        C = ((1.0 - c_1 - c_mu) * C
             + c_1 * (np.outer(p_c, p_c) + delta_h * C)
             + c_mu * rank_mu)

        sigma = sigma * math.exp((c_sigma / d_sigma) * (norm_ps / chi_n - 1.0))
        sigma = float(np.clip(sigma, 1e-14 * domain.diagonal, 10.0 * domain.diagonal))

        C = 0.5 * (C + C.T)
        eigvals, B = np.linalg.eigh(C)
        D = np.sqrt(np.maximum(eigvals, 1e-30))

    return best_x, best_f
