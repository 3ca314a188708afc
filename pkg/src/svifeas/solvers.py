"""Extragradient (Korpelevich) and Popov iterations composed with feasibility passes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .feasibility import ConfigError, FeasibilityConfig, random_feasibility_pass, sample_count
from .numkit import BoxSet, RealVec, SeededStream, project_box, sample_uniform_box
from .problem import ProblemSpec, map_sample

AVERAGING_MODES = ("alpha", "inv_alpha", "uniform")


@dataclass(frozen=True)
class StepSchedule:
    """Step size rule alpha_k.

    kinds:
      constant_horizon  min(alpha_bar / sqrt(T), cap)
      diminishing       min(alpha_bar / sqrt(k+1), cap)
      parameter_free    alpha_bar / sqrt(k+1), no cap
    where cap = sqrt(1 - w4) / (sqrt(2) L).
    """

    kind: str
    alpha_bar: float
    w4: float = 0.1
    lipschitz: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant_horizon", "diminishing", "parameter_free"):
            raise ConfigError(f"unknown step schedule kind {self.kind!r}")
        if self.alpha_bar <= 0:
            raise ConfigError("alpha_bar must be positive")
        if not 0.0 < self.w4 < 1.0:
            raise ConfigError("w4 must lie in (0, 1)")

    @property
    def cap(self) -> float:
        if self.kind == "parameter_free" or not self.lipschitz:
            return math.inf
        return math.sqrt(1.0 - self.w4) / (math.sqrt(2.0) * self.lipschitz)


def step_size_at(s: StepSchedule, k: int, horizon: int) -> float:
    if s.kind == "constant_horizon":
        return min(s.alpha_bar / math.sqrt(horizon), s.cap)
    base = s.alpha_bar / math.sqrt(k + 1)
    if s.kind == "diminishing":
        return min(base, s.cap)
    return base


@dataclass(frozen=True)
class SolverConfig:
    method: str  # "korpelevich" | "popov"
    steps: StepSchedule
    feas: FeasibilityConfig
    horizon: int
    master_seed: int
    averaging: str = "inv_alpha"

    def __post_init__(self):
        if self.method not in ("korpelevich", "popov"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.averaging not in AVERAGING_MODES:
            raise ConfigError(f"unknown averaging mode {self.averaging!r}")


@dataclass
class SolverTrace:
    """Per-iteration record of a single solver run. All three averaging modes
    are maintained simultaneously in one pass."""

    ks: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    n_feas: list = field(default_factory=list)
    us: list = field(default_factory=list)
    vs: list = field(default_factory=list)
    xs: list = field(default_factory=list)
    averages: dict = field(default_factory=lambda: {m: [] for m in AVERAGING_MODES})
    residuals: list = field(default_factory=list)
    fresh_evals: list = field(default_factory=list)
    x0: RealVec | None = None

    def final_average(self, mode: str) -> RealVec:
        return self.averages[mode][-1]


def running_weighted_average(avg_prev: RealVec, wsum_prev: float, x_new: RealVec,
                             w_new: float):
    """Streaming form of sum(w_t x_t) / sum(w_t)."""
    if w_new <= 0:
        raise ValueError("weights must be positive")
    wsum = wsum_prev + w_new
    if wsum_prev == 0.0:
        return x_new.copy(), wsum
    return (wsum_prev * avg_prev + w_new * x_new) / wsum, wsum


class _CountingOracle:
    """Counts fresh stochastic map evaluations."""

    def __init__(self, spec: ProblemSpec, rng: SeededStream):
        self.spec = spec
        self.rng = rng
        self.count = 0

    def __call__(self, x: RealVec) -> RealVec:
        self.count += 1
        return map_sample(self.spec, x, self.rng)


def korpelevich_step(x_prev: RealVec, alpha: float, spec: ProblemSpec,
                     rng: SeededStream):
    """Two projected updates with two fresh samples; returns (u, v)."""
    box = spec.base_set
    u = project_box(x_prev - alpha * map_sample(spec, x_prev, rng), box)
    v = project_box(x_prev - alpha * map_sample(spec, u, rng), box)
    return u, v


def popov_step(x_prev: RealVec, u_prev: RealVec, fhat_old: RealVec, alpha: float,
               spec: ProblemSpec, rng: SeededStream):
    """One fresh sample per call: reuse fhat_old = F-hat(u_prev, xi_prev) for
    the auxiliary update, then evaluate at the new auxiliary point."""
    box = spec.base_set
    u = project_box(x_prev - alpha * fhat_old, box)
    fhat_new = map_sample(spec, u, rng)
    v = project_box(x_prev - alpha * fhat_new, box)
    return u, v, fhat_new


def _weight(mode: str, alpha: float) -> float:
    if mode == "alpha":
        return alpha
    if mode == "inv_alpha":
        return 1.0 / alpha
    return 1.0


def run_solver(spec: ProblemSpec, cfg: SolverConfig) -> SolverTrace:
    root = SeededStream(cfg.master_seed)
    init_rng = root.substream("init")
    noise_rng = root.substream("noise")
    feas_rng = root.substream("feas")

    box = spec.base_set
    oracle = _CountingOracle(spec, noise_rng)

    x = sample_uniform_box(box, init_rng)
    trace = SolverTrace(x0=x.copy())

    avg = {m: np.zeros_like(x) for m in AVERAGING_MODES}
    wsum = {m: 0.0 for m in AVERAGING_MODES}

    if cfg.method == "popov":
        u_prev = x.copy()  # u_0 = x_0
        fhat_old = oracle(u_prev)

    for k in range(1, cfg.horizon + 1):
        alpha = step_size_at(cfg.steps, k, cfg.horizon)
        if cfg.method == "korpelevich":
            u = project_box(x - alpha * oracle(x), box)
            v = project_box(x - alpha * oracle(u), box)
        else:
            u = project_box(x - alpha * fhat_old, box)
            fhat_old = oracle(u)
            v = project_box(x - alpha * fhat_old, box)
            u_prev = u
        n_k = sample_count(cfg.feas.schedule, k)
        x, res = random_feasibility_pass(v, n_k, spec.family, cfg.feas.beta,
                                         box, feas_rng)

        for m in AVERAGING_MODES:
            avg[m], wsum[m] = running_weighted_average(avg[m], wsum[m], x,
                                                       _weight(m, alpha))
            trace.averages[m].append(avg[m].copy())

        trace.ks.append(k)
        trace.alphas.append(alpha)
        trace.n_feas.append(n_k)
        trace.us.append(u)
        trace.vs.append(v)
        trace.xs.append(x.copy())
        trace.residuals.append(res)
        trace.fresh_evals.append(oracle.count)

    return trace
