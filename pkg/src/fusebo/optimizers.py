"""The four sequential optimization loops behind one run interface.

All loops share the same skeleton: evaluate an initial design, then repeat
(fit surrogate hyperparameters, maximize an acquisition over the box, observe)
until the evaluation budget is spent.  They differ only in the acquisition and
in how a pre-existing low-fidelity dataset is exploited:

  gp_ucb  plain UCB on the high-fidelity GP
  abo     UCB on the weighted fusion of the HF and LF posteriors, with the
          LF weight adapted after every observation
  mfbo1   LF GP suggests the first design point, then plain gp_ucb
  mfbo2   acquisition min(ucb_hf, ucb_lf + zeta); only HF queries are made

Randomness is split into five independent substreams per run (initial design,
acquisition search, observation noise, HF hyperparameter restarts, LF
hyperparameter restarts), all derived from the single config seed.  Algorithms
therefore share initial designs and noise draws for the same seed, and extra
LF-side computations never shift the shared streams.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .acquisition import BetaSchedule, BoxDomain, default_population_size, maximize
from .benchmarks import ObjectiveCase
from .fusion import WeightState, dwpoe_moments, weight_update
from .gp import (Dataset, FitConfig, GaussianBelief, GpHyperparams,
                 GpNumericalError, default_init, fit_hyperparams, fit_posterior,
                 predict_batch)

ALGORITHMS = ("gp_ucb", "abo", "mfbo1", "mfbo2")

# Standard deviations are floored here inside the loops before fusion or
# likelihood evaluation; exact interpolation would otherwise produce zero-sd
# beliefs that the fusion formulas cannot digest.
SD_FLOOR = 1e-12


@dataclass(frozen=True)
class RunConfig:
    """Settings of a single optimization run."""

    budget: int = 20
    n_init: int = 2
    beta: BetaSchedule = field(default_factory=BetaSchedule.constant)
    seed: int = 0
    refit_every: int = 1
    acq_evals: Optional[int] = None  # None: 100 * population size
    n_restarts: int = 5
    w_lf_init: float = 0.5
    alpha: float = 0.9
    weight_update_enabled: bool = True
    zeta: Optional[float] = None  # None: std of the LF outputs
    init_design: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (self.budget >= self.n_init >= 1):
            raise ValueError(f"need budget >= n_init >= 1, got {self.budget}, {self.n_init}")
        if self.refit_every < 1:
            raise ValueError("refit_every must be >= 1")


@dataclass
class RunRecord:
    """Per-iteration trace of one run; all arrays have length budget."""

    algorithm: str
    case_name: str
    seed: int
    xs: np.ndarray          # (budget, d) query points in evaluation order
    ys: np.ndarray          # observed values (noisy if noise_sd > 0)
    f_true: np.ndarray      # noiseless objective at the queries
    incumbent: np.ndarray   # running max of ys
    seconds: np.ndarray     # wall-clock per evaluation
    w_lf: Optional[np.ndarray] = None   # LF weight trace (abo only)
    fit_failures: list[int] = field(default_factory=list)

    @property
    def budget(self) -> int:
        return len(self.ys)

    def to_dict(self) -> dict:
        d = {
            "schema_version": 1,
            "algorithm": self.algorithm,
            "case": self.case_name,
            "seed": self.seed,
            "xs": self.xs.tolist(),
            "ys": self.ys.tolist(),
            "f_true": self.f_true.tolist(),
            "incumbent": self.incumbent.tolist(),
            "seconds": self.seconds.tolist(),
            "fit_failures": list(self.fit_failures),
        }
        d["w_lf"] = self.w_lf.tolist() if self.w_lf is not None else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            algorithm=d["algorithm"], case_name=d["case"], seed=d["seed"],
            xs=np.asarray(d["xs"], dtype=float),
            ys=np.asarray(d["ys"], dtype=float),
            f_true=np.asarray(d["f_true"], dtype=float),
            incumbent=np.asarray(d["incumbent"], dtype=float),
            seconds=np.asarray(d["seconds"], dtype=float),
            w_lf=None if d.get("w_lf") is None else np.asarray(d["w_lf"], dtype=float),
            fit_failures=list(d.get("fit_failures", [])),
        )


@dataclass
class _Streams:
    design: np.random.Generator
    acq: np.random.Generator
    noise: np.random.Generator
    hf_fit: np.random.Generator
    lf_fit: np.random.Generator


def _spawn_streams(seed: int) -> _Streams:
    children = np.random.SeedSequence(seed).spawn(5)
    return _Streams(*(np.random.default_rng(c) for c in children))


def _acq_budget(config: RunConfig, dim: int) -> int:
    if config.acq_evals is not None:
        return config.acq_evals
    return 100 * default_population_size(dim)


def _fit_lf_model(lf_data: Dataset, domain: BoxDomain, config: RunConfig, streams: _Streams):
    cfg = FitConfig(n_restarts=config.n_restarts, rng=streams.lf_fit,
                    domain_diameter=domain.diagonal)
    hyper = fit_hyperparams(lf_data, default_init(lf_data, domain.diagonal), cfg)
    return fit_posterior(lf_data, hyper)


def _observe(case: ObjectiveCase, x: np.ndarray, noise_rng: np.random.Generator) -> tuple[float, float]:
    """Evaluate the objective at x; returns (observation, noiseless value).

    One noise variate is consumed per observation regardless of noise_sd so
    that noise streams stay aligned across configurations.
    """
    f_val = float(case.hf(x))
    eps = noise_rng.standard_normal()
    y = f_val + case.noise_sd * eps
    return y, f_val


def _run(case: ObjectiveCase, config: RunConfig, algorithm: str,
         lf_data: Optional[Dataset] = None) -> RunRecord:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
    needs_lf = algorithm != "gp_ucb"
    if needs_lf and (lf_data is None or lf_data.n == 0):
        raise ValueError(f"{algorithm} requires a non-empty low-fidelity dataset")

    domain = case.domain
    streams = _spawn_streams(config.seed)
    acq_evals = _acq_budget(config, domain.dim)
    hf_fit_cfg = FitConfig(n_restarts=config.n_restarts, rng=streams.hf_fit,
                           domain_diameter=domain.diagonal)

    t_start = time.perf_counter()

    lf_model = _fit_lf_model(lf_data, domain, config, streams) if needs_lf else None
    zeta = None
    if algorithm == "mfbo2":
        zeta = config.zeta if config.zeta is not None else float(np.std(lf_data.outputs))

    # ----- initial design -----
    if config.init_design is not None:
        X0 = np.atleast_2d(np.asarray(config.init_design, dtype=float))
        if X0.shape != (config.n_init, domain.dim):
            raise ValueError(f"init_design must have shape ({config.n_init}, {domain.dim})")
    elif algorithm == "mfbo1":
        sb = config.beta.sqrt_beta(1)

        def lf_ucb(X):
            m, s = predict_batch(lf_model, X)
            return m + sb * s

        warm, _ = maximize(lf_ucb, domain, acq_evals, streams.design)
        rest = domain.sample(streams.design, config.n_init - 1)
        X0 = np.vstack([warm[None, :], rest]) if config.n_init > 1 else warm[None, :]
    else:
        X0 = domain.sample(streams.design, config.n_init)

    xs, ys, f_true = [], [], []
    for i in range(config.n_init):
        y, fv = _observe(case, X0[i], streams.noise)
        xs.append(X0[i].copy())
        ys.append(y)
        f_true.append(fv)

    design_seconds = time.perf_counter() - t_start
    seconds = [design_seconds / config.n_init] * config.n_init

    weight = WeightState(config.w_lf_init, config.alpha) if algorithm == "abo" else None
    w_trace = [config.w_lf_init] * config.n_init if algorithm == "abo" else None

    hyper: Optional[GpHyperparams] = None
    fit_failures: list[int] = []

    # ----- main loop -----
    for t in range(config.n_init, config.budget):
        tic = time.perf_counter()
        data = Dataset(np.asarray(xs), np.asarray(ys))

        if hyper is None or (t - config.n_init) % config.refit_every == 0:
            init = hyper if hyper is not None else default_init(data, domain.diagonal)
            try:
                hyper = fit_hyperparams(data, init, hf_fit_cfg)
            except GpNumericalError:
                fit_failures.append(t)
                if hyper is None:
                    hyper = default_init(data, domain.diagonal)
        model = fit_posterior(data, hyper)

        sb = config.beta.sqrt_beta(t)

        if algorithm == "abo":
            w = weight.w_lf

            def acq(X):
                hm, hs = predict_batch(model, X)
                lm, ls = predict_batch(lf_model, X)
                rm, rs = dwpoe_moments(hm, np.maximum(hs, SD_FLOOR),
                                       lm, np.maximum(ls, SD_FLOOR), w)
                return rm + sb * rs
        elif algorithm == "mfbo2":

            def acq(X):
                hm, hs = predict_batch(model, X)
                lm, ls = predict_batch(lf_model, X)
                return np.minimum(hm + sb * hs, lm + sb * ls + zeta)
        else:  # gp_ucb and the post-warm-start phase of mfbo1

            def acq(X):
                m, s = predict_batch(model, X)
                return m + sb * s

        x_next, _ = maximize(acq, domain, acq_evals, streams.acq)
        y_best = max(ys)
        y_next, f_next = _observe(case, x_next, streams.noise)

        if algorithm == "abo" and config.weight_update_enabled:
            hm, hs = predict_batch(model, x_next[None, :])
            lm, ls = predict_batch(lf_model, x_next[None, :])
            hf_pred = GaussianBelief(float(hm[0]), max(float(hs[0]), SD_FLOOR))
            lf_pred = GaussianBelief(float(lm[0]), max(float(ls[0]), SD_FLOOR))
            weight = weight_update(weight, y_next, y_best, lf_pred, hf_pred)

        xs.append(np.asarray(x_next, dtype=float))
        ys.append(y_next)
        f_true.append(f_next)
        if w_trace is not None:
            w_trace.append(weight.w_lf)
        seconds.append(time.perf_counter() - tic)

    ys_arr = np.asarray(ys)
    return RunRecord(
        algorithm=algorithm, case_name=case.name, seed=config.seed,
        xs=np.asarray(xs), ys=ys_arr, f_true=np.asarray(f_true),
        incumbent=np.maximum.accumulate(ys_arr),
        seconds=np.asarray(seconds),
        w_lf=np.asarray(w_trace) if w_trace is not None else None,
        fit_failures=fit_failures,
    )


def run_gp_ucb(case: ObjectiveCase, config: RunConfig) -> RunRecord:
    """Plain UCB optimization on a single high-fidelity GP."""
    return _run(case, config, "gp_ucb")


def run_abo(case: ObjectiveCase, lf_data: Dataset, config: RunConfig) -> RunRecord:
    """Fusion-regularized UCB: the LF GP is fitted once, its influence adapted online."""
    return _run(case, config, "abo", lf_data)


def run_mfbo1(case: ObjectiveCase, lf_data: Dataset, config: RunConfig) -> RunRecord:
    """Warm start: the LF GP's UCB maximizer becomes the first design point."""
    return _run(case, config, "mfbo1", lf_data)


def run_mfbo2(case: ObjectiveCase, lf_data: Dataset, config: RunConfig) -> RunRecord:
    """Capped acquisition min(ucb_hf, ucb_lf + zeta); only HF queries are spent."""
    return _run(case, config, "mfbo2", lf_data)


def run_algorithm(algorithm: str, case: ObjectiveCase, config: RunConfig,
                  lf_data: Optional[Dataset] = None) -> RunRecord:
    """Dispatch by algorithm name; lf_data may be None only for gp_ucb."""
    return _run(case, config, algorithm, lf_data)
