import math

import numpy as np
import pytest

from svifeas.feasibility import ConfigError, FeasibilityConfig, SampleSchedule
from svifeas.numkit import BoxSet, SeededStream
from svifeas.problem import ConstraintFamily, MappingOracle, ProblemSpec, make_zero_sum_game
from svifeas.solvers import (
    AVERAGING_MODES,
    SolverConfig,
    StepSchedule,
    korpelevich_step,
    popov_step,
    run_solver,
    running_weighted_average,
    step_size_at,
)
from svifeas.verify import WitnessedProblem, check_theorem42, witness_by_rejection

FEAS1 = FeasibilityConfig(beta=1.0, schedule=SampleSchedule(kind="constant", n=1))


def _line_spec(noise=0.0):
    """1D F(x) = x on Y = [-1, 1]; unique solution at the origin."""
    box = BoxSet(np.array([-1.0]), np.array([1.0]))
    oracle = MappingOracle(mean_map=lambda x: x.copy(), noise_stddev=noise,
                           lipschitz=1.0)
    return ProblemSpec(oracle=oracle, base_set=box, family=ConstraintFamily([], box))


def _zero_spec(dim=2):
    box = BoxSet(-np.ones(dim), np.ones(dim))
    oracle = MappingOracle(mean_map=lambda x: np.zeros_like(x), noise_stddev=0.0,
                           lipschitz=0.0)
    return ProblemSpec(oracle=oracle, base_set=box, family=ConstraintFamily([], box))


def test_step_size_parameter_free():
    s = StepSchedule(kind="parameter_free", alpha_bar=1.0)
    assert step_size_at(s, 3, horizon=100) == pytest.approx(0.5)  # 1/sqrt(4)


def test_step_size_constant_horizon():
    s = StepSchedule(kind="constant_horizon", alpha_bar=1.0)
    for k in (1, 7, 100):
        assert step_size_at(s, k, horizon=100) == pytest.approx(0.1)


def test_step_size_diminishing_hits_cap():
    # lipschitz chosen so cap = sqrt(1 - w4) / (sqrt(2) L) = 0.2 exactly
    lip = math.sqrt(0.9) / (math.sqrt(2.0) * 0.2)
    s = StepSchedule(kind="diminishing", alpha_bar=1.0, w4=0.1, lipschitz=lip)
    assert s.cap == pytest.approx(0.2)
    assert step_size_at(s, 3, horizon=100) == pytest.approx(0.2)  # min(0.5, cap)
    assert step_size_at(s, 99, horizon=100) == pytest.approx(0.1)  # below cap


def test_parameter_free_ignores_cap():
    s = StepSchedule(kind="parameter_free", alpha_bar=10.0, lipschitz=100.0)
    assert s.cap == math.inf


def test_step_schedule_validation():
    with pytest.raises(ConfigError):
        StepSchedule(kind="weird", alpha_bar=1.0)
    with pytest.raises(ConfigError):
        StepSchedule(kind="diminishing", alpha_bar=0.0)
    with pytest.raises(ConfigError):
        StepSchedule(kind="diminishing", alpha_bar=1.0, w4=1.5)


def test_korpelevich_step_zero_map():
    spec = _zero_spec()
    x = np.array([0.3, -0.4])
    u, v = korpelevich_step(x, 0.5, spec, SeededStream(0))
    np.testing.assert_array_equal(u, x)
    np.testing.assert_array_equal(v, x)


def test_korpelevich_step_hand_values():
    spec = _line_spec()
    u, v = korpelevich_step(np.array([1.0]), 0.5, spec, SeededStream(0))
    np.testing.assert_allclose(u, [0.5])   # 1 - 0.5 * F(1)
    np.testing.assert_allclose(v, [0.75])  # 1 - 0.5 * F(0.5)


def test_korpelevich_fixed_point_at_solution():
    spec = _line_spec()
    u, v = korpelevich_step(np.array([0.0]), 0.5, spec, SeededStream(0))
    np.testing.assert_array_equal(u, [0.0])
    np.testing.assert_array_equal(v, [0.0])


def test_popov_step_zero_map():
    spec = _zero_spec()
    x = np.array([0.3, -0.4])
    u, v, fnew = popov_step(x, x, np.zeros(2), 0.5, spec, SeededStream(0))
    np.testing.assert_array_equal(u, x)
    np.testing.assert_array_equal(v, x)
    np.testing.assert_array_equal(fnew, np.zeros(2))


def test_popov_step_hand_values():
    spec = _line_spec()
    u, v, fnew = popov_step(np.array([1.0]), np.array([1.0]), np.array([1.0]),
                            0.5, spec, SeededStream(0))
    np.testing.assert_allclose(u, [0.5])
    np.testing.assert_allclose(fnew, [0.5])
    np.testing.assert_allclose(v, [0.75])


def test_running_average_midpoint():
    a, b = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    avg, w = running_weighted_average(np.zeros(2), 0.0, a, 1.0)
    avg, w = running_weighted_average(avg, w, b, 1.0)
    np.testing.assert_allclose(avg, [0.5, 0.5])


def test_running_average_single_point():
    x = np.array([0.2, -0.7])
    avg, w = running_weighted_average(np.zeros(2), 0.0, x, 3.0)
    np.testing.assert_array_equal(avg, x)
    assert w == 3.0


def test_running_average_matches_batch():
    rng = SeededStream(6)
    pts = [rng.uniform(-1, 1, size=4) for _ in range(100)]
    weights = [math.sqrt(k + 1) for k in range(1, 101)]  # 1/alpha_k, alpha=1/sqrt(k+1)
    avg, wsum = np.zeros(4), 0.0
    for x, w in zip(pts, weights):
        avg, wsum = running_weighted_average(avg, wsum, x, w)
    batch = sum(w * x for x, w in zip(pts, weights)) / sum(weights)
    np.testing.assert_allclose(avg, batch, atol=1e-12)


def test_running_average_rejects_bad_weight():
    with pytest.raises(ValueError):
        running_weighted_average(np.zeros(1), 0.0, np.zeros(1), 0.0)


def test_solver_config_validation():
    steps = StepSchedule(kind="parameter_free", alpha_bar=1.0)
    with pytest.raises(ConfigError):
        SolverConfig(method="gauss", steps=steps, feas=FEAS1, horizon=5, master_seed=0)
    with pytest.raises(ConfigError):
        SolverConfig(method="popov", steps=steps, feas=FEAS1, horizon=0, master_seed=0)


def _game_cfg(method, spec, horizon, seed, schedule="diminishing"):
    steps = StepSchedule(kind=schedule, alpha_bar=0.3,
                         lipschitz=spec.oracle.lipschitz)
    feas = FeasibilityConfig(beta=1.0, schedule=SampleSchedule(kind="power", r=2.0))
    return SolverConfig(method=method, steps=steps, feas=feas, horizon=horizon,
                        master_seed=seed)


def test_run_solver_deterministic():
    spec = make_zero_sum_game(2, 50, SeededStream(14, ("game",)))
    cfg = _game_cfg("korpelevich", spec, 40, seed=3)
    t1 = run_solver(spec, cfg)
    t2 = run_solver(spec, cfg)
    np.testing.assert_array_equal(t1.xs[-1], t2.xs[-1])
    np.testing.assert_array_equal(t1.final_average("alpha"), t2.final_average("alpha"))
    assert t1.alphas == t2.alphas


def test_run_solver_fresh_eval_counts():
    spec = make_zero_sum_game(2, 20, SeededStream(15, ("game",)))
    kor = run_solver(spec, _game_cfg("korpelevich", spec, 100, seed=1))
    assert kor.fresh_evals[-1] == 200
    pop = run_solver(spec, _game_cfg("popov", spec, 100, seed=1,
                                     schedule="parameter_free"))
    assert pop.fresh_evals[-1] == 101


def test_run_solver_tracks_all_averaging_modes():
    spec = make_zero_sum_game(2, 10, SeededStream(16, ("game",)))
    trace = run_solver(spec, _game_cfg("korpelevich", spec, 25, seed=2))
    for mode in AVERAGING_MODES:
        assert len(trace.averages[mode]) == 25
        assert spec.base_set.contains(trace.final_average(mode))


def test_run_solver_sample_counts_follow_schedule():
    spec = make_zero_sum_game(2, 10, SeededStream(17, ("game",)))
    trace = run_solver(spec, _game_cfg("korpelevich", spec, 30, seed=2))
    assert trace.n_feas == [math.ceil(math.sqrt(k)) for k in range(1, 31)]
    assert [r.size for r in trace.residuals] == trace.n_feas


def test_run_solver_iterates_stay_in_box():
    spec = make_zero_sum_game(2, 50, SeededStream(18, ("game",)))
    trace = run_solver(spec, _game_cfg("popov", spec, 60, seed=4,
                                       schedule="parameter_free"))
    for x in trace.xs:
        assert spec.base_set.contains(x)


def test_run_solver_feasibility_inequality_full_horizon():
    # sure per-iterate inequality against a rejection-sampled witness
    spec = make_zero_sum_game(2, 100, SeededStream(19, ("game",)))
    witness = witness_by_rejection(spec, 10_000, SeededStream(19, ("w",)))
    wp = WitnessedProblem(spec=spec, witness=witness)
    trace = run_solver(spec, _game_cfg("korpelevich", spec, 5000, seed=6))
    worst = check_theorem42(trace, wp, beta=1.0, mg=spec.family.subgrad_bound)
    assert worst <= 1e-10
