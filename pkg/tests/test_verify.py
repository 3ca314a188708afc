import numpy as np
import pytest

from svifeas.feasibility import FeasibilityConfig, SampleSchedule
from svifeas.numkit import BoxSet, SeededStream
from svifeas.problem import ConstraintFamily, MappingOracle, ProblemSpec, QuadraticConstraint
from svifeas.solvers import SolverConfig, StepSchedule, run_solver
from svifeas.verify import (
    WitnessedProblem,
    _halfspace_testbed,
    _one_step_inequality_worst,
    brute_force_projection_grid,
    check_feasibility_decay,
    check_sequence_bounds,
    check_theorem42,
    finite_diff_subgrad_check,
    standard_report,
    witness_by_rejection,
)


def _halfspace_wp():
    wp, (a, b) = _halfspace_testbed(seed=7)
    return wp, a, b


def test_witness_is_feasible():
    wp, a, b = _halfspace_wp()
    assert float(a @ wp.witness) <= b + 1e-12
    assert wp.spec.base_set.contains(wp.witness)


def test_grid_projection_feasible_point_snaps():
    wp, a, b = _halfspace_wp()
    x = wp.witness
    out = brute_force_projection_grid(x, wp, pitch=0.01)
    assert np.linalg.norm(out - x) <= 0.01 * np.sqrt(2) + 1e-12


def test_grid_projection_matches_analytic_halfspace():
    wp, a, b = _halfspace_wp()
    # pick a box point violating the halfspace; its projection is the
    # orthogonal drop onto the hyperplane (a is unit norm)
    rng = SeededStream(33)
    for _ in range(5):
        x = rng.uniform(-1, 1, size=2)
        viol = float(a @ x) - b
        if viol <= 0.05:
            continue
        analytic = x - viol * a
        if not wp.spec.base_set.contains(analytic):
            continue
        for pitch in (0.02, 0.01):
            grid = brute_force_projection_grid(x, wp, pitch=pitch)
            # the best feasible grid point can sit a couple of cells away
            # from the true projection along an oblique boundary, but its
            # distance to x can exceed the true distance by at most one cell
            assert np.linalg.norm(grid - analytic) <= 3 * pitch
            dist_err = np.linalg.norm(grid - x) - np.linalg.norm(analytic - x)
            assert -1e-12 <= dist_err <= pitch * np.sqrt(2)


def test_grid_projection_error_scales_with_pitch():
    wp, a, b = _halfspace_wp()
    x = np.array([0.95, 0.95])
    exact = wp.projector(x)
    err_coarse = np.linalg.norm(brute_force_projection_grid(x, wp, 0.04) - exact)
    err_fine = np.linalg.norm(brute_force_projection_grid(x, wp, 0.02) - exact)
    assert err_fine <= 0.02 * np.sqrt(2)
    assert err_coarse <= 0.04 * np.sqrt(2)


def test_grid_projection_guards():
    wp, _, _ = _halfspace_wp()
    with pytest.raises(ValueError):
        brute_force_projection_grid(np.zeros(2), wp, pitch=0.0)


def test_finite_diff_affine_exact():
    c = QuadraticConstraint(np.zeros((2, 2)), np.array([1.0, -2.0]), -1.0)
    err = finite_diff_subgrad_check(c, np.array([3.0, 0.0]), h=1e-5)
    assert err <= 1e-9


def test_finite_diff_quadratic_small_error():
    rng = SeededStream(3)
    m = rng.normal(1.0, size=(3, 3))
    c = QuadraticConstraint(m @ m.T, rng.uniform(-1, 1, size=3), -5.0)
    x = rng.uniform(0.5, 1.0, size=3)
    assert finite_diff_subgrad_check(c, x, h=1e-5) <= 1e-6


def test_finite_diff_stable_across_h():
    # central differences are exact for quadratics; both step sizes should sit
    # at roundoff level (the smaller h a little noisier, never worse than 1e-6)
    rng = SeededStream(4)
    m = rng.normal(1.0, size=(3, 3))
    c = QuadraticConstraint(m @ m.T, rng.uniform(-1, 1, size=3), -5.0)
    x = rng.uniform(0.5, 1.0, size=3)
    assert finite_diff_subgrad_check(c, x, h=1e-3) <= 1e-9
    assert finite_diff_subgrad_check(c, x, h=1e-5) <= 1e-6


def test_finite_diff_requires_infeasible_point():
    c = QuadraticConstraint(np.zeros((1, 1)), np.array([1.0]), 1.0)
    with pytest.raises(ValueError):
        finite_diff_subgrad_check(c, np.array([0.0]), h=1e-5)


def _unconstrained_trace(horizon=20):
    box = BoxSet(-np.ones(2), np.ones(2))
    oracle = MappingOracle(mean_map=lambda x: x.copy(), noise_stddev=0.1,
                           lipschitz=1.0)
    spec = ProblemSpec(oracle=oracle, base_set=box,
                       family=ConstraintFamily([], box))
    cfg = SolverConfig(method="korpelevich",
                       steps=StepSchedule(kind="parameter_free", alpha_bar=0.3),
                       feas=FeasibilityConfig(beta=1.0,
                                              schedule=SampleSchedule(kind="constant", n=3)),
                       horizon=horizon, master_seed=8)
    return spec, run_solver(spec, cfg)


def test_theorem42_zero_residuals_tight():
    # with no constraints x_k = v_k and the inequality holds with equality
    spec, trace = _unconstrained_trace()
    wp = WitnessedProblem(spec=spec, witness=np.zeros(2))
    assert abs(check_theorem42(trace, wp, beta=1.0, mg=1.0)) <= 1e-12


def test_theorem42_detects_corrupted_residual():
    spec, trace = _unconstrained_trace()
    wp = WitnessedProblem(spec=spec, witness=np.zeros(2))
    trace.residuals[5] = np.array([1.0])  # inject a phantom residual
    assert check_theorem42(trace, wp, beta=1.0, mg=1.0) > 0


def test_theorem42_requires_residuals():
    spec, trace = _unconstrained_trace()
    trace.residuals = []
    with pytest.raises(ValueError):
        check_theorem42(trace, WitnessedProblem(spec=spec, witness=np.zeros(2)),
                        beta=1.0, mg=1.0)


def test_one_step_inequality_many_random_cases():
    assert _one_step_inequality_worst(2000) <= 1e-12


def test_decay_exact_projection_at_one_step():
    # beta = 1 on a single affine constraint projects exactly: distances at
    # every N sit at the numerical floor
    wp, a, b = _halfspace_wp()
    fit = check_feasibility_decay(wp, beta=1.0, n_values=[1, 2, 3], seeds=20)
    assert all(d <= 1e-9 for d in fit.mean_dists)


def test_decay_slope_negative_at_half_beta():
    wp, a, b = _halfspace_wp()
    fit = check_feasibility_decay(wp, beta=0.5, n_values=range(1, 16), seeds=50)
    assert fit.slope < 0
    assert fit.r_squared >= 0.9


def test_decay_beta_one_fastest():
    # q = beta(2-beta)/(c Mg^2) peaks at beta = 1
    wp, a, b = _halfspace_wp()
    n_values = range(1, 16)
    mid = check_feasibility_decay(wp, beta=1.0, n_values=n_values, seeds=50,
                                  master_seed=2)
    lo = check_feasibility_decay(wp, beta=0.5, n_values=n_values, seeds=50,
                                 master_seed=2)
    hi = check_feasibility_decay(wp, beta=1.5, n_values=n_values, seeds=50,
                                 master_seed=2)
    assert mid.slope <= lo.slope + 1e-6
    assert mid.slope <= hi.slope + 1e-6


def test_decay_needs_projector():
    spec = _halfspace_wp()[0].spec
    bare = WitnessedProblem(spec=spec, witness=np.zeros(2))
    with pytest.raises(ValueError):
        check_feasibility_decay(bare, 1.0, [1, 2], seeds=2)


def test_sequence_bounds_boundary_case():
    # alpha_bar=1, T=1: sum alpha = 1/sqrt(2) meets its bound with equality
    assert check_sequence_bounds(1.0, [1])


def test_sequence_bounds_large_and_small():
    assert check_sequence_bounds(10.0, [10_000])
    assert check_sequence_bounds(0.1, [2])


def test_sequence_bounds_direct_sum_third_bound():
    alpha_bar, horizon = 0.1, 2
    ks = np.arange(1, horizon + 1)
    direct = float(np.sum(np.sqrt(ks + 1.0) / alpha_bar))
    stated = (np.sqrt(1.5) - 2.0 / 3.0) * horizon**1.5 / alpha_bar
    assert direct >= stated
    assert check_sequence_bounds(alpha_bar, [horizon])


def test_sequence_bounds_rejects_bad_alpha():
    with pytest.raises(ValueError):
        check_sequence_bounds(0.0, [1])


def test_witness_by_rejection_raises_when_infeasible():
    box = BoxSet(np.array([-1.0]), np.array([1.0]))
    cons = QuadraticConstraint(np.zeros((1, 1)), np.array([1.0]), -50.0)
    oracle = MappingOracle(mean_map=lambda x: x, noise_stddev=0.0, lipschitz=1.0)
    spec = ProblemSpec(oracle=oracle, base_set=box,
                       family=ConstraintFamily([cons], box))
    with pytest.raises(RuntimeError):
        witness_by_rejection(spec, 200, SeededStream(0))


def test_standard_report_all_green():
    results = standard_report(fast=True)
    assert len(results) == 7
    for r in results:
        assert r.passed, f"{r.name} failed with measured={r.measured}"
