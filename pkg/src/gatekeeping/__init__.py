"""Equilibrium solvers for the gatekeeping-expert communication game."""

from .analysis import SweepRow, info_amount, sweep_complexity, sweep_independence
from .constraints import ConstraintProfile, b_hat, constraint_profile, gamma, gamma_g, gamma_inverse
from .distributions import (
    Distribution,
    Exponential,
    Family,
    Logistic,
    Normal,
    TruncatedView,
    Uniform,
    expected_sq_loss,
    from_spec,
    truncated_moments,
)
from .equilibrium import DeviationReport, SelfSignalingResult, find_self_signaling_set, verify_partition_equilibrium
from .errors import GatekeepingError, SolverError, ValidationError
from .oracle import OracleConfig, oracle_partition, oracle_report
from .precise_silence import SilenceOutcome, no_communication_outcome, solve_silence_set
from .reporting import Branch, ReportSolution, acceptance_prob, solve_fixed_point_h2, solve_report
from .vague_partition import (
    Partition,
    ValueFunction,
    bellman_step,
    evaluate_strategy,
    solve_partition,
    solve_partition_dp,
    solve_uniform_closed_form,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
