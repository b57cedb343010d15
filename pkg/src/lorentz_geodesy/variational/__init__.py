"""Variational solvers for the geodesic connection problem."""

from .functionals import (action_gradient, action_value, action_value_grad, discrete_energy,
                          penalty_psi, reconstruct_time, splitting_penalized_value_grad,
                          static_J_value_grad, stationary_J1_value, stationary_J1_value_grad,
                          stationary_time_constant)
from .growth import GrowthReport, growth_check
from .optimize import OptimizeOutcome, OptimizeStatus, lbfgs
from .paths import GalerkinTime, NodalTime, PathDiscretization, sine_basis
from .results import ConnectednessResult, ConnectionRecord, ConnectStatus, VariationalOptions
from .saddle import default_eps, solve_splitting_saddle
from .shooting import geodesic_residual, refine_by_shooting
from .static import minimize_connect_static, multistart_windings
from .stationary import (StationaryReducedState, charges, integrate_reduced, reduction_terms,
                         stationary_connect_shooting, stationary_reduced_rhs)

__all__ = [
    "action_gradient", "action_value", "action_value_grad", "discrete_energy", "penalty_psi",
    "reconstruct_time", "splitting_penalized_value_grad", "static_J_value_grad",
    "stationary_J1_value", "stationary_J1_value_grad", "stationary_time_constant",
    "GrowthReport", "growth_check", "OptimizeOutcome", "OptimizeStatus", "lbfgs",
    "GalerkinTime", "NodalTime", "PathDiscretization", "sine_basis",
    "ConnectednessResult", "ConnectionRecord", "ConnectStatus", "VariationalOptions",
    "default_eps", "solve_splitting_saddle", "geodesic_residual", "refine_by_shooting",
    "minimize_connect_static", "multistart_windings", "StationaryReducedState", "charges",
    "integrate_reduced", "reduction_terms", "stationary_connect_shooting", "stationary_reduced_rhs",
]
