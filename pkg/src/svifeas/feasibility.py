"""Randomized Polyak feasibility passes and their sample-count schedules."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numkit import BoxSet, RealVec, SeededStream, project_box
from .problem import ConstraintFamily, GenerativeFamily

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


class DegenerateSubgradientError(RuntimeError):
    """A strictly infeasible point came with a zero subgradient."""


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SampleSchedule:
    """Per-iteration feasibility sample counts N_k.

    kinds:
      constant   N_k = N
      power      N_k = ceil(k^(1/r)), r >= 1
      log        N_k = max(1, ceil(log_m k)), m > 1
      max        N_k = max(N, ceil(k^(1/r)))
    """

    kind: str
    n: int = 1
    r: float = 2.0
    m: float = 2.0

    def __post_init__(self):
        if self.kind not in ("constant", "power", "log", "max"):
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if self.kind in ("constant", "max") and self.n < 1:
            raise ConfigError("constant sample count must be >= 1")
        if self.kind in ("power", "max") and self.r < 1:
            raise ConfigError("power schedule needs r >= 1")
        if self.kind == "log" and self.m <= 1:
            raise ConfigError("log schedule needs base m > 1")


def sample_count(schedule: SampleSchedule, k: int) -> int:
    if k < 1:
        raise ConfigError("iteration index must be >= 1")
    if schedule.kind == "constant":
        return schedule.n
    if schedule.kind == "power":
        return math.ceil(k ** (1.0 / schedule.r))
    if schedule.kind == "log":
        return max(1, math.ceil(math.log(k, schedule.m)))
    return max(schedule.n, math.ceil(k ** (1.0 / schedule.r)))


@dataclass(frozen=True)
class FeasibilityConfig:
    beta: float
    schedule: SampleSchedule

    def __post_init__(self):
        if not 0.0 < self.beta < 2.0:
            raise ConfigError(f"beta must lie in (0, 2), got {self.beta}")


def compute_q(beta: float, c: float, mg: float) -> float:
    """Contraction quantity q = beta(2-beta) / (c M_g^2), clamped to (0, 1]."""
    if not 0.0 < beta < 2.0:
        raise ConfigError("beta must lie in (0, 2)")
    if c <= 0 or mg <= 0:
        raise ConfigError("c and Mg must be positive")
    q = beta * (2.0 - beta) / (c * mg * mg)
    if q > 1.0:
        import warnings

        warnings.warn(f"computed q = {q:.3g} > 1; clamping to 1", stacklevel=2)
        return 1.0
    return q


def polyak_step(z: RealVec, gplus: float, d: RealVec, beta: float, box: BoxSet) -> RealVec:
    """One relaxed subgradient step toward {g <= 0}, then back into the box."""
    if not 0.0 < beta < 2.0:
        raise ConfigError("beta must lie in (0, 2)")
    if gplus <= 0.0:
        return z
    dn2 = float(d @ d)
    if dn2 == 0.0:
        raise DegenerateSubgradientError("gplus > 0 with a zero subgradient")
    return project_box(z - (beta * gplus / dn2) * d, box)


@njit(cache=True)
def _pass_kernel(quad, lin, off, start, lo, hi, z, idx, beta):  # pragma: no cover
    n_steps = idx.shape[0]
    p = lin.shape[1]
    res = np.zeros(n_steps)
    dvec = np.zeros(p)
    status = 0
    for s in range(n_steps):
        j = idx[s]
        st = start[j]
        g = -off[j]
        for a in range(p):
            za = z[st + a]
            g += lin[j, a] * za
            row = 0.0
            for b in range(p):
                row += quad[j, a, b] * z[st + b]
            g += za * row
        if g > 0.0:
            res[s] = g * g
            dn2 = 0.0
            for a in range(p):
                da = lin[j, a]
                for b in range(p):
                    da += 2.0 * quad[j, a, b] * z[st + b]
                dvec[a] = da
                dn2 += da * da
            if dn2 == 0.0:
                status = 1
                break
            scale = beta * g / dn2
            for a in range(p):
                v = z[st + a] - scale * dvec[a]
                if v < lo[st + a]:
                    v = lo[st + a]
                elif v > hi[st + a]:
                    v = hi[st + a]
                z[st + a] = v
    return res, status


def random_feasibility_pass(v: RealVec, n_steps: int, family, beta: float,
                            box: BoxSet, rng: SeededStream):
    """N sequential Polyak steps at uniformly sampled constraint indices.

    Returns the final point and the squared positive residuals
    (g+_omega_i(z_{i-1}))^2 observed along the chain.
    """
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    if not 0.0 < beta < 2.0:
        raise ConfigError("beta must lie in (0, 2)")

    if isinstance(family, GenerativeFamily):
        z = v.copy()
        residuals = np.zeros(n_steps)
        for i in range(n_steps):
            constraint = family.draw(rng)
            gplus, d = constraint.plus_subgradient(z)
            residuals[i] = gplus * gplus
            z = polyak_step(z, gplus, d, beta, box)
        return z, residuals

    if len(family) == 0:
        return v.copy(), np.zeros(0)

    idx = np.asarray(rng.integers(len(family), size=n_steps), dtype=np.int64)
    stack = family.stack
    if stack is not None:
        quad, lin, off, start = stack
        z = v.copy()
        residuals, status = _pass_kernel(quad, lin, off, start,
                                         box.lo, box.hi, z, idx, beta)
        if status != 0:
            raise DegenerateSubgradientError("gplus > 0 with a zero subgradient")
        return z, residuals

    z = v.copy()
    residuals = np.zeros(n_steps)
    for i, j in enumerate(idx):
        gplus, d = family.members[j].plus_subgradient(z)
        residuals[i] = gplus * gplus
        z = polyak_step(z, gplus, d, beta, box)
    return z, residuals
