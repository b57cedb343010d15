"""Geodesics of semi-Riemannian (chiefly Lorentzian) manifolds.

Submodules
----------
exprlang      scalar expression language for metric coefficients
geometry      models, Christoffel symbols, causal character
catalog       named example spacetimes and generic constructors
integrator    geodesic integration with incompleteness detection
completeness  integral criteria for warped and GRW spacetimes
variational   discretized functionals and connection solvers
io, cli       deterministic output and the command-line front end
"""

from . import catalog, completeness, exprlang, geometry, integrator, variational
from .catalog import build
from .completeness import (CompletenessVerdict, Verdict, classify_grw, classify_warped_radial,
                           improper_integral_verdict, killing_certificate)
from .exceptions import (ConfigError, DegenerateMetricError, DomainViolation, ExprDomainError,
                         ExprSyntaxError, GeodesyError, IntegrationError, ModelError,
                         NotDifferentiableError, UnboundVariableError)
from .exprlang import diff, parse
from .geometry import (CausalCharacter, KillingField, QuotientStructure, SpacetimeModel,
                       causal_character, christoffel_at, metric_at)
from .integrator import (GeodesicSolution, IntegratorOptions, Termination, integrate_geodesic,
                         lightlike_reparam)
from .variational import (ConnectednessResult, PathDiscretization, VariationalOptions,
                          minimize_connect_static, multistart_windings, solve_splitting_saddle,
                          stationary_connect_shooting)

__version__ = "0.1.0"

__all__ = [
    "catalog", "completeness", "exprlang", "geometry", "integrator", "variational", "build",
    "CompletenessVerdict", "Verdict", "classify_grw", "classify_warped_radial",
    "improper_integral_verdict", "killing_certificate",
    "ConfigError", "DegenerateMetricError", "DomainViolation", "ExprDomainError", "ExprSyntaxError",
    "GeodesyError", "IntegrationError", "ModelError", "NotDifferentiableError", "UnboundVariableError",
    "diff", "parse", "CausalCharacter", "KillingField", "QuotientStructure", "SpacetimeModel",
    "causal_character", "christoffel_at", "metric_at", "GeodesicSolution", "IntegratorOptions",
    "Termination", "integrate_geodesic", "lightlike_reparam", "ConnectednessResult",
    "PathDiscretization", "VariationalOptions", "minimize_connect_static", "multistart_windings",
    "solve_splitting_saddle", "stationary_connect_shooting",
]
