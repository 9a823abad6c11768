"""Implicitly constituted incompressible fluids.

Relation catalog and admissibility checks, epsilon-regularized resolvents,
a 2D MAC-grid flow solver with energy and weak-form diagnostics, and the
scenario harness behind the ``rheo`` command.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .admissibility import (
    AdmissibilityReport,
    check_all,
    check_asymptotics,
    check_boundary,
    check_coercivity,
    check_derivative_signs,
    check_graph_monotone,
    check_lipschitz,
)
from .config import Scenario, SimConfig, load_scenario, scenario_from_text
from .grid import Grid
from .harness import RunResult, SweepResult, run_scenario, sweep
from .kvfile import ConfigError
from .oracles import analytic_poiseuille
from .regularization import (
    NoConvergence,
    continuation_resolve,
    estimate_resolvent_constants,
    make_eps_boundary,
    make_eps_bulk,
    resolve_slip,
    resolve_stress,
)
from .relations import (
    BoundaryRelation,
    BulkRelation,
    ExplicitFormUnavailable,
    eval_boundary,
    eval_bulk,
    explicit_rate,
    explicit_slip,
    explicit_stress,
    explicit_traction,
    load_relation,
    relation_from_text,
)
from .sampling import Sampler
from .solver import FlowSolver, FlowState, SolverError
from .tensors import SymTensor2

__all__ = [
    "AdmissibilityReport",
    "BoundaryRelation",
    "BulkRelation",
    "ConfigError",
    "ExplicitFormUnavailable",
    "FlowSolver",
    "FlowState",
    "Grid",
    "NoConvergence",
    "RunResult",
    "Sampler",
    "Scenario",
    "SimConfig",
    "SolverError",
    "SweepResult",
    "SymTensor2",
    "analytic_poiseuille",
    "check_all",
    "check_asymptotics",
    "check_boundary",
    "check_coercivity",
    "check_derivative_signs",
    "check_graph_monotone",
    "check_lipschitz",
    "continuation_resolve",
    "estimate_resolvent_constants",
    "eval_boundary",
    "eval_bulk",
    "explicit_rate",
    "explicit_slip",
    "explicit_stress",
    "explicit_traction",
    "load_relation",
    "load_scenario",
    "make_eps_boundary",
    "make_eps_bulk",
    "relation_from_text",
    "resolve_slip",
    "resolve_stress",
    "run_scenario",
    "scenario_from_text",
    "sweep",
]
