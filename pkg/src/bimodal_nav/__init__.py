"""Bi-modal walk/fly path planning and MPC gait following for a limbed drone."""

from .grid_map import GridIndex, OccupancyGrid, WorldPoint, dump_grid, load_grid
from .kinematics import (
    Axis,
    BodyState,
    JointAngles,
    LimbGeometry,
    LimbTarget,
    decompose_step,
    forward_kinematics,
    gait_step_trajectory,
    inverse_kinematics,
    max_step_length,
)
from .mpc import MpcConfig, MpcProblem, MpcSolution, predict, select_axis, solve, stage_cost
from .planner import (
    ModalPath,
    ModalWaypoint,
    Mode,
    SearchConfig,
    Transition,
    nearest_to_goal,
    path_to_world,
    plan_2d,
    plan_3d_landing,
    plan_bimodal,
)
from .sim import (
    DisturbanceModel,
    ErrorReport,
    FollowConfig,
    Granularity,
    Polyline,
    TrajectoryLog,
    apply_disturbance,
    calibrate_noise,
    compute_errors,
    run_closed_loop,
    run_mission,
    run_open_loop,
)

__version__ = "0.1.0"
