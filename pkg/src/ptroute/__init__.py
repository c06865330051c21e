"""Prospect-theoretic splittable routing: perceived BPR costs, their logistic
approximation, and Nash equilibria of the smoothed game."""

from .approx import (
    ErrorBound,
    FitConfig,
    FitResult,
    SigmoidParams,
    bound_constant,
    check_error_bound,
    concavity_certificate,
    error_profile,
    fit_sigmoid,
    pt_target,
    sigmoid,
    sigmoid_derivatives,
)
from .behavior import (
    BehaviorParams,
    ReferencePoint,
    bpr_cost,
    bpr_cost_derivative,
    default_reference,
    objective_player_cost,
    prelec_weight,
    pt_edge_cost,
    pt_player_cost,
    pt_route_cost,
    reference_map,
    reference_relative_cost,
    value_function,
)
from .equilibrium import (
    EquilibriumResult,
    SolverConfig,
    best_response,
    brute_force_nash,
    player_gradient,
    solve_nash,
    vi_certificate,
)
from .network import (
    Edge,
    FlowProfile,
    Network,
    PlayerSpec,
    edge_flow,
    edge_flows,
    feasible_point,
    project_to_action_set,
    validate_network,
)
from .scenario import ScenarioConfig, ScenarioError, load_scenario, parse_scenario

__version__ = "0.1.0"
