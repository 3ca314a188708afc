"""Stochastic variational inequality solvers with randomized feasibility updates."""

from .feasibility import (
    FeasibilityConfig,
    SampleSchedule,
    compute_q,
    polyak_step,
    random_feasibility_pass,
    sample_count,
)
from .numkit import (
    BoxSet,
    SeededStream,
    gaussian_vector,
    project_box,
    random_sym_with_spectrum,
    sample_uniform_box,
    spectral_norm_power,
)
from .problem import (
    ConstraintFamily,
    GenerativeFamily,
    MappingOracle,
    ProblemSpec,
    QuadraticConstraint,
    make_zero_sum_game,
    map_mean,
    map_sample,
    operator_bound_B,
)
from .solvers import (
    SolverConfig,
    SolverTrace,
    StepSchedule,
    korpelevich_step,
    popov_step,
    run_solver,
    running_weighted_average,
    step_size_at,
)

__all__ = [
    "BoxSet", "SeededStream", "gaussian_vector", "project_box",
    "random_sym_with_spectrum", "sample_uniform_box", "spectral_norm_power",
    "ConstraintFamily", "GenerativeFamily", "MappingOracle", "ProblemSpec",
    "QuadraticConstraint", "make_zero_sum_game", "map_mean", "map_sample",
    "operator_bound_B",
    "FeasibilityConfig", "SampleSchedule", "compute_q", "polyak_step",
    "random_feasibility_pass", "sample_count",
    "SolverConfig", "SolverTrace", "StepSchedule", "korpelevich_step",
    "popov_step", "run_solver", "running_weighted_average", "step_size_at",
]

__version__ = "0.1.0"
