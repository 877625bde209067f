"""Model problems, study runners and the command-line interface."""

from .config import StudyConfig, build_config, load_config_file
from .problems import PROBLEM_NAMES, ModelProblem, get_problem, verify_load
from .studies import (
    CSV_COLUMNS,
    check_study,
    run_boundary_example,
    run_condition_study,
    run_convergence,
    run_rotation_study,
    write_csv,
    write_gnuplot_script,
    write_solution,
)

__all__ = [
    "CSV_COLUMNS", "PROBLEM_NAMES", "check_study", "ModelProblem", "StudyConfig",
    "build_config", "get_problem", "load_config_file", "verify_load",
    "run_boundary_example", "run_condition_study", "run_convergence", "run_rotation_study",
    "write_csv", "write_gnuplot_script", "write_solution",
]
