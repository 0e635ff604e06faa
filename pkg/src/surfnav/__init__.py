"""Multi-robot navigation on parametric surfaces via coordinated guiding
vector fields.

Robots carry two extra virtual coordinates (the surface parameters) as
integrator states.  The lifted guiding field steers each robot onto the
surface and along it without singular points, while repulsion between
virtual coordinates and attraction toward a moving virtual target produce
an evenly spaced, ordering-flexible formation.
"""

from .engine import (
    MetricsSnapshot,
    SimulationResult,
    SimulationState,
    closed_loop_error_rhs,
    lyapunov_value,
    metrics_snapshot,
    rk4_increment,
    rk4_step,
    run_simulation,
    swarm_rhs,
)
from .errors import ScenarioError, SeparationViolationError
from .field import (
    ControlOutput,
    FieldGains,
    cgvf_control,
    higher_dim_gvf,
    original_gvf_3d,
    pairwise_repulsion,
    repulsion_potential,
    repulsion_terms,
    repulsion_weight,
    repulsion_weight_derivative,
)
from .scenario import Scenario, load_scenario, scenario_to_toml, write_scenario
from .surfaces import (
    SurfaceModel,
    eval_jacobian,
    eval_surface,
    make_surface,
    plane,
    surface_error,
    torus,
    wave,
)
from .swarm import (
    ConsensusConfig,
    EstimatorMode,
    RobotState,
    SwarmConfig,
    TargetState,
    estimator_step,
    neighbor_sets,
    target_velocity,
    validate_initial_separation,
)

__version__ = "0.1.0"

__all__ = [
    "ControlOutput",
    "ConsensusConfig",
    "EstimatorMode",
    "FieldGains",
    "MetricsSnapshot",
    "RobotState",
    "Scenario",
    "ScenarioError",
    "SeparationViolationError",
    "SimulationResult",
    "SimulationState",
    "SurfaceModel",
    "SwarmConfig",
    "TargetState",
    "cgvf_control",
    "closed_loop_error_rhs",
    "estimator_step",
    "eval_jacobian",
    "eval_surface",
    "higher_dim_gvf",
    "load_scenario",
    "lyapunov_value",
    "make_surface",
    "metrics_snapshot",
    "neighbor_sets",
    "original_gvf_3d",
    "pairwise_repulsion",
    "plane",
    "repulsion_potential",
    "repulsion_terms",
    "repulsion_weight",
    "repulsion_weight_derivative",
    "rk4_increment",
    "rk4_step",
    "run_simulation",
    "scenario_to_toml",
    "surface_error",
    "swarm_rhs",
    "target_velocity",
    "torus",
    "validate_initial_separation",
    "wave",
    "write_scenario",
    "__version__",
]
