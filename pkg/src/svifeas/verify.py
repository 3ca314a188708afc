"""Independent oracles and inequality checkers for the solver guarantees.

Each checker is implemented from first principles (direct summation, grids,
finite differences) rather than through the module it validates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .feasibility import random_feasibility_pass
from .metrics import fit_linear
from .numkit import BoxSet, RealVec, SeededStream, sample_uniform_box
from .problem import ProblemSpec, QuadraticConstraint
from .solvers import SolverTrace


@dataclass(frozen=True)
class WitnessedProblem:
    """Problem plus one certified feasible point (and, for small test problems,
    an exact projection oracle onto S)."""

    spec: ProblemSpec
    witness: RealVec
    projector: object = None


def witness_by_rejection(spec: ProblemSpec, n_candidates: int,
                         rng: SeededStream) -> RealVec:
    """First feasible point among uniform box candidates."""
    box = spec.base_set
    for _ in range(n_candidates):
        x = sample_uniform_box(box, rng)
        vals = spec.family.eval_all(x[None, :])[0]
        if np.all(vals <= 0.0):
            return x
    raise RuntimeError(f"no feasible witness among {n_candidates} candidates")


def brute_force_projection_grid(x: RealVec, wp: WitnessedProblem,
                                pitch: float) -> RealVec:
    """Nearest feasible grid point; error vs the true projection <= pitch*sqrt(dim)."""
    box = wp.spec.base_set
    if box.dim > 3:
        raise ValueError("grid oracle supports dimension <= 3 only")
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    axes = [np.arange(box.lo[i], box.hi[i] + pitch / 2, pitch)
            for i in range(box.dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    vals = wp.spec.family.eval_all(pts)
    feas = pts[np.all(vals <= 0.0, axis=1)]
    if feas.shape[0] == 0:
        raise RuntimeError("no feasible grid point at this pitch")
    dists = np.sum((feas - x[None, :]) ** 2, axis=1)
    return feas[int(np.argmin(dists))]


def finite_diff_subgrad_check(constraint: QuadraticConstraint, x: RealVec,
                              h: float) -> float:
    """Central-difference gradient of g vs the returned subgradient, max abs error.

    Only meaningful at strictly infeasible points, where g+ is smooth."""
    if h <= 0:
        raise ValueError("h must be positive")
    gplus, d = constraint.plus_subgradient(x)
    if gplus <= 0:
        raise ValueError("point must be strictly infeasible")
    err = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        num = (constraint.value(x + e) - constraint.value(x - e)) / (2 * h)
        err = max(err, abs(num - d[i]))
    return err


def check_theorem42(trace: SolverTrace, wp: WitnessedProblem, beta: float,
                    mg: float) -> float:
    """Worst relative violation of the per-pass sure inequality
    ||x_k - w||^2 <= ||v_k - w||^2 - beta(2-beta)/Mg^2 * sum (g+)^2."""
    if not trace.residuals:
        raise ValueError("trace carries no feasibility residuals")
    w = wp.witness
    factor = beta * (2.0 - beta) / (mg * mg)
    worst = -math.inf
    for v, x, res in zip(trace.vs, trace.xs, trace.residuals):
        vdist = float(np.sum((v - w) ** 2))
        lhs = float(np.sum((x - w) ** 2))
        rhs = vdist - factor * float(np.sum(res))
        worst = max(worst, (lhs - rhs) / (1.0 + vdist))
    return worst


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    mean_dists: tuple


def check_feasibility_decay(wp: WitnessedProblem, beta: float, n_values,
                            seeds: int, master_seed: int = 0,
                            floor: float = 1e-14) -> DecayFit:
    """Geometric infeasibility decay: mean dist(x, S) after one pass of N steps,
    fitted log-linearly against N."""
    if wp.projector is None:
        raise ValueError("needs an exact projection oracle")
    spec = wp.spec
    box = spec.base_set
    means = []
    for n in n_values:
        total = 0.0
        for s in range(seeds):
            rng = SeededStream(master_seed, ("decay", int(n), s))
            v = sample_uniform_box(box, rng.substream("start"))
            x, _ = random_feasibility_pass(v, int(n), spec.family, beta, box,
                                           rng.substream("pass"))
            total += float(np.linalg.norm(x - wp.projector(x)))
        means.append(max(total / seeds, floor))
    slope, intercept, r2 = fit_linear(list(n_values), np.log(means))
    return DecayFit(slope=slope, intercept=intercept, r_squared=r2,
                    mean_dists=tuple(means))


def check_sequence_bounds(alpha_bar: float, horizons) -> bool:
    """Direct-summation check of the step-sequence bounds for
    alpha_k = alpha_bar / sqrt(k+1):
      sum alpha_k   >= alpha_bar sqrt(T) / sqrt(2)
      sum alpha_k^2 <= alpha_bar^2 ln(T+2)
      sum 1/alpha_k >= (1/alpha_bar) ((3/2)^(1/2) - 2/3) T^(3/2)   for T >= 2
    """
    if alpha_bar <= 0:
        raise ValueError("alpha_bar must be positive")
    tol = 1e-12
    for horizon in horizons:
        ks = np.arange(1, horizon + 1, dtype=np.float64)
        alphas = alpha_bar / np.sqrt(ks + 1.0)
        if float(alphas.sum()) < alpha_bar * math.sqrt(horizon) / math.sqrt(2.0) - tol:
            return False
        if float((alphas**2).sum()) > alpha_bar**2 * math.log(horizon + 2) + tol:
            return False
        if horizon >= 2:
            lb = (math.sqrt(1.5) - 2.0 / 3.0) * horizon**1.5 / alpha_bar
            if float((1.0 / alphas).sum()) < lb - tol:
                return False
    return True


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: str


def _halfspace_testbed(seed: int = 7):
    """2D box with a single affine constraint cutting through its interior."""
    from .metrics import dykstra_projection
    from .problem import ConstraintFamily, MappingOracle

    box = BoxSet(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    rng = SeededStream(seed, ("testbed",))
    a = rng.normal(1.0, size=2)
    a = a / np.linalg.norm(a)
    b = float(rng.uniform(-0.3, 0.3))
    cons = QuadraticConstraint(np.zeros((2, 2)), a, b)
    family = ConstraintFamily([cons], box)
    oracle = MappingOracle(mean_map=lambda x: np.zeros_like(x),
                           noise_stddev=0.0, lipschitz=0.0)
    spec = ProblemSpec(oracle=oracle, base_set=box, family=family)
    witness = witness_by_rejection(spec, 10_000, SeededStream(seed, ("wit",)))
    projector = lambda x: dykstra_projection(x, box, [(a, b)], iters=400)
    return WitnessedProblem(spec=spec, witness=witness, projector=projector), (a, b)


def _one_step_inequality_worst(cases: int, master_seed: int = 3) -> float:
    """Random (constraint, point, beta, witness) draws of the one-step
    inequality; returns the worst relative violation."""
    from .feasibility import polyak_step

    rng = SeededStream(master_seed, ("onestep",))
    box = BoxSet(-2 * np.ones(3), 2 * np.ones(3))
    worst = -math.inf
    for i in range(cases):
        affine = i % 2 == 0
        if affine:
            quad = np.zeros((3, 3))
        else:
            from .numkit import random_sym_with_spectrum
            quad = random_sym_with_spectrum(rng.uniform(0.0, 2.0, size=3), rng)
        lin = rng.uniform(-2.0, 2.0, size=3)
        wbar = sample_uniform_box(box, rng)
        z = sample_uniform_box(box, rng)
        beta = float(rng.uniform(0.05, 1.95))
        # choose the offset so wbar is feasible
        gx = float(wbar @ quad @ wbar + lin @ wbar)
        off = gx + float(rng.uniform(0.0, 1.0))
        cons = QuadraticConstraint(quad, lin, off)
        gplus, d = cons.plus_subgradient(z)
        if gplus <= 0.0:
            continue
        zhat = polyak_step(z, gplus, d, beta, box)
        lhs = float(np.sum((zhat - wbar) ** 2))
        rhs = float(np.sum((z - wbar) ** 2)) - beta * (2 - beta) * gplus**2 / float(d @ d)
        worst = max(worst, (lhs - rhs) / (1.0 + float(np.sum((z - wbar) ** 2))))
    return worst


def standard_report(fast: bool = True) -> list:
    """The CLI `verify` suite: one line per check, deterministic per seed."""
    from .feasibility import FeasibilityConfig, SampleSchedule
    from .metrics import dykstra_projection
    from .problem import make_zero_sum_game
    from .solvers import SolverConfig, StepSchedule, run_solver

    results = []

    worst = _one_step_inequality_worst(2000 if fast else 10_000)
    results.append(CheckResult("polyak-step-inequality", worst <= 1e-12, worst,
                               "<= 1e-12"))

    game = make_zero_sum_game(2, 200 if fast else 1000, SeededStream(11, ("g",)))
    witness = witness_by_rejection(game, 10_000, SeededStream(11, ("w",)))
    wp = WitnessedProblem(spec=game, witness=witness)
    cfg = SolverConfig(
        method="korpelevich",
        steps=StepSchedule(kind="diminishing", alpha_bar=0.3, w4=0.1,
                           lipschitz=game.oracle.lipschitz),
        feas=FeasibilityConfig(beta=1.0, schedule=SampleSchedule(kind="power", r=2.0)),
        horizon=200 if fast else 500, master_seed=5)
    trace = run_solver(game, cfg)
    mg = game.family.subgrad_bound
    v42 = check_theorem42(trace, wp, beta=1.0, mg=mg)
    results.append(CheckResult("per-pass-feasibility-inequality", v42 <= 1e-10, v42,
                               "<= 1e-10"))

    wp2, (a, b) = _halfspace_testbed()
    fit = check_feasibility_decay(wp2, beta=0.5,
                                  n_values=range(1, 16 if fast else 31),
                                  seeds=50 if fast else 200)
    ok = fit.slope < 0 and fit.r_squared >= 0.9
    results.append(CheckResult("feasibility-geometric-decay", ok, fit.slope,
                               "slope < 0, R^2 >= 0.9"))

    worst_dev = 0.0
    for i in range(5 if fast else 20):
        wp3, (a3, b3) = _halfspace_testbed(seed=100 + i)
        rng = SeededStream(200 + i, ("dyk",))
        v = sample_uniform_box(wp3.spec.base_set, rng)
        x, _ = random_feasibility_pass(v, 500, wp3.spec.family, 1.0,
                                       wp3.spec.base_set, rng.substream("p"))
        worst_dev = max(worst_dev, float(np.linalg.norm(x - wp3.projector(v))))
    results.append(CheckResult("pass-vs-dykstra-projection", worst_dev <= 1e-3,
                               worst_dev, "<= 1e-3"))

    seq_ok = all(check_sequence_bounds(ab, [1, 2, 10, 100, 10_000])
                 for ab in (0.1, 1.0, 10.0))
    results.append(CheckResult("step-sequence-bounds", seq_ok, float(seq_ok),
                               "all bounds hold"))

    counts_ok = True
    for method, expected in (("korpelevich", 100), ("popov", 51)):
        c = SolverConfig(method=method,
                         steps=StepSchedule(kind="parameter_free", alpha_bar=0.3),
                         feas=FeasibilityConfig(beta=1.0,
                                                schedule=SampleSchedule(kind="constant", n=1)),
                         horizon=50, master_seed=9)
        tr = run_solver(game, c)
        counts_ok = counts_ok and tr.fresh_evals[-1] == expected
    results.append(CheckResult("fresh-evaluation-counts", counts_ok,
                               float(counts_ok), "2T and T+1 exactly"))

    from .numkit import random_sym_with_spectrum as _rsws
    rngq = SeededStream(13, ("fd",))
    quad = _rsws(rngq.uniform(0.5, 2.0, size=3), rngq)
    cons = QuadraticConstraint(quad, rngq.uniform(-1.0, 1.0, size=3), -5.0)
    x = rngq.uniform(0.5, 1.0, size=3)
    err = finite_diff_subgrad_check(cons, x, h=1e-5)
    results.append(CheckResult("subgradient-finite-difference", err <= 1e-6, err,
                               "<= 1e-6"))

    return results
