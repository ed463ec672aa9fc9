"""Risk-aware re-planning of supply-chain product flows after lead-time disruptions."""

from .metrics import (
    ObjectiveSummary,
    aggregate_objectives,
    customer_service_metrics,
    lateness_distribution,
    mean_total_lateness,
    plan_objective_pairs,
    write_distribution_csv,
    write_summary_json,
)
from .model import (
    Agent,
    Disruption,
    FlowEntry,
    FlowPlan,
    Gaussian,
    Network,
    SaaConfig,
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    dumps_plan,
    load_scenario,
    normalize_scenario,
    parse_scenario,
    scenario_to_dict,
    topological_order,
)
from .optimizer import (
    aggregate_saa,
    solve_supplier_response,
    solve_supplier_selection,
)
from .protocol import (
    DisruptionNotice,
    ProtocolError,
    ReplanTrace,
    RoundTrace,
    UnmetRecord,
    build_requests,
    identify_disruption,
    run_replanning,
)
from .simulator import (
    SimulationError,
    SimulationOutcome,
    simulate_many,
    simulate_round,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "Disruption",
    "DisruptionNotice",
    "FlowEntry",
    "FlowPlan",
    "Gaussian",
    "Network",
    "ObjectiveSummary",
    "ProtocolError",
    "ReplanTrace",
    "RoundTrace",
    "SaaConfig",
    "Scenario",
    "ScenarioParseError",
    "ScenarioValidationError",
    "SimulationError",
    "SimulationOutcome",
    "UnmetRecord",
    "aggregate_objectives",
    "aggregate_saa",
    "build_requests",
    "customer_service_metrics",
    "dumps_plan",
    "identify_disruption",
    "lateness_distribution",
    "load_scenario",
    "mean_total_lateness",
    "normalize_scenario",
    "parse_scenario",
    "plan_objective_pairs",
    "run_replanning",
    "scenario_to_dict",
    "simulate_many",
    "simulate_round",
    "solve_supplier_response",
    "solve_supplier_selection",
    "topological_order",
    "write_distribution_csv",
    "write_summary_json",
    "__version__",
]
