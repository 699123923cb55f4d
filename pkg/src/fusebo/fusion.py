"""Gaussian belief fusion and the adaptive low-fidelity weight dynamics.

Two fusion rules live here.  Plain product-of-experts fusion multiplies the
member densities, so precisions add.  The weighted two-expert variant raises
the high-fidelity density to the power (1 - w) and the low-fidelity density
to the power w, which turns into a convex combination of precisions:

    mean = (mu_hf * w1 * P1 + mu_lf * w2 * P2) / (w1 P1 + w2 P2)
    var  = 1 / (w1 P1 + w2 P2),      w1 = 1 - w, w2 = w, P = 1/sd^2.

The weight w is adapted over time: a forgetting step pulls it toward 0.5,
then a Bayes step reweights by the likelihood each expert assigned to the
newest observation.  The Bayes step only fires on improving observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gp import GaussianBelief

# Largest double below 1; weight updates are capped here so w < 1 survives rounding.
_W_CAP = float(np.nextafter(1.0, 0.0))

# Below this log-likelihood both experts call the observation impossible and
# the update carries no information.
_LOG_LIK_FLOOR = -700.0

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class WeightState:
    """Low-fidelity expert weight in [0, 1) plus the forgetting factor."""

    w_lf: float
    alpha: float = 0.9

    def __post_init__(self):
        if not (0.0 <= self.w_lf < 1.0):
            raise ValueError(f"w_lf must lie in [0, 1), got {self.w_lf}")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class FusedBelief:
    """Mean and standard deviation of the weighted-fusion posterior."""

    mean: float
    sd: float


def initial_weight(w_lf: float = 0.5, alpha: float = 0.9) -> WeightState:
    """Default starting state: equal trust in both experts, mild forgetting."""
    return WeightState(w_lf=w_lf, alpha=alpha)


def poe_fuse(beliefs: list[GaussianBelief]) -> GaussianBelief:
    """Product-of-experts fusion: precisions add, means are precision-weighted."""
    if not beliefs:
        raise ValueError("poe_fuse needs at least one belief")
    for b in beliefs:
        if b.sd <= 0:
            raise ValueError(f"poe_fuse requires sd > 0, got {b.sd}")
    prec = np.array([1.0 / (b.sd ** 2) for b in beliefs])
    means = np.array([b.mean for b in beliefs])
    total = prec.sum()
    return GaussianBelief(float((means * prec).sum() / total), float(np.sqrt(1.0 / total)))


def dwpoe_moments(hf_mean, hf_sd, lf_mean, lf_sd, w_lf: float):
    """Array-friendly weighted fusion; returns (mean, sd) with input broadcasting.

    w_lf == 0 short-circuits to the high-fidelity inputs unchanged so that the
    zero-weight path is exact, not merely close.
    """
    if w_lf == 0.0:
        return hf_mean, hf_sd
    p1 = (1.0 - w_lf) / np.square(hf_sd)
    p2 = w_lf / np.square(lf_sd)
    total = p1 + p2
    mean = (hf_mean * p1 + lf_mean * p2) / total
    return mean, np.sqrt(1.0 / total)


def dwpoe_fuse(hf: GaussianBelief, lf: GaussianBelief, w_lf: float) -> FusedBelief:
    """Weighted two-expert fusion of a high- and a low-fidelity belief."""
    if not (0.0 <= w_lf < 1.0):
        raise ValueError(f"w_lf must lie in [0, 1), got {w_lf}")
    if hf.sd <= 0 or lf.sd <= 0:
        raise ValueError("dwpoe_fuse requires strictly positive sds")
    mean, sd = dwpoe_moments(hf.mean, hf.sd, lf.mean, lf.sd, w_lf)
    return FusedBelief(float(mean), float(sd))


def weight_predict(state: WeightState) -> float:
    """Forgetting step: w^a / (w^a + (1-w)^a), a contraction toward 0.5."""
    w, a = state.w_lf, state.alpha
    if w == 0.0:
        return 0.0
    num = w ** a
    return num / (num + (1.0 - w) ** a)


def log_normal_pdf(y: float, mean: float, sd: float) -> float:
    """log N(y | mean, sd^2); sd must be positive."""
    if sd <= 0:
        raise ValueError(f"sd must be > 0, got {sd}")
    z = (y - mean) / sd
    return -0.5 * z * z - math.log(sd) - _LOG_SQRT_2PI


def weight_update(state: WeightState, y_new: float, y_best_so_far: float,
                  lf_pred: GaussianBelief, hf_pred: GaussianBelief) -> WeightState:
    """Forgetting step followed by a gated Bayes reweighting.

    Only observations that improve on the incumbent trigger the Bayes step;
    otherwise the predicted weight is kept.  Likelihoods are combined in
    log-space: w' is the logistic of
    (log w_hat + log l_lf) - (log(1 - w_hat) + log l_hf).
    """
    w_hat = weight_predict(state)
    if not (y_new > y_best_so_far):
        return WeightState(w_hat, state.alpha)
    if w_hat == 0.0:
        return WeightState(0.0, state.alpha)

    log_lf = log_normal_pdf(y_new, lf_pred.mean, lf_pred.sd)
    log_hf = log_normal_pdf(y_new, hf_pred.mean, hf_pred.sd)
    if log_lf < _LOG_LIK_FLOOR and log_hf < _LOG_LIK_FLOOR:
        return WeightState(w_hat, state.alpha)

    z = (math.log(w_hat) + log_lf) - (math.log1p(-w_hat) + log_hf)
    if z >= 0:
        w_new = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        w_new = e / (1.0 + e)
    return WeightState(min(w_new, _W_CAP), state.alpha)
