"""Trajectory planning toolkit for nonholonomic robots: occupancy-grid world
model, lattice front-end search, safe-corridor construction, penalty-based
trajectory optimization, and a from-scratch bound-constrained quasi-Newton
solver."""

from .config import ConfigError, PlannerConfig, load_config
from .corridor import Corridor, CorridorFailure, HPolygon, build_corridor, contains
from .gridmap import GridFormatError, OccupancyGrid, load_grid, save_grid
from .hybrid_astar import (
    CoarsePath,
    GoalOccupied,
    NoPath,
    PlanningError,
    Pose,
    SearchParams,
    StartOccupied,
    plan_path,
    resample_path,
    snap_path_to_free,
    wrap_angle,
)
from .io import (
    ScenarioError,
    ScenarioSpec,
    load_scenario,
    parse_state,
    read_knot_csv,
    write_corridor_json,
    write_dense_csv,
    write_knot_csv,
)
from .lbfgsb import BoxProblem, LbfgsHistory, SolverOptions, SolverResult, minimize
from .objective import (
    PenaltyObjective,
    angle_residual,
    equality_penalty,
    full_objective_and_gradient,
    inequality_penalty,
    objective_smoothness_time,
    pack,
    penalty_L,
    penalty_L_grad,
    transition,
    unpack,
)
from .optimizer import (
    ProblemSpec,
    SolveReport,
    curvature_violation_max,
    equality_residual_max,
    initial_guess,
    naive_time_parameterization,
    project_into_corridor,
    resample_warm_start,
    safety_violation_max,
    solve,
    transfer_warm_start,
)
from .pipeline import PlanResult, plan_trajectory
from .trajectory import DenseTrajectory, Trajectory, TrajectoryPoint, metrics, sample_trajectory

__version__ = "0.1.0"
