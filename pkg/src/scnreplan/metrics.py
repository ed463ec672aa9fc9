"""Evaluation arithmetic: lateness distributions, cost/lateness aggregates.

Two accounting styles are exposed, both needed side by side: deterministic
accounting reads the plan's promised arrivals (supplier-selection style),
while simulated accounting reads realized arrivals from simulation
outcomes. Delay values are bucketed after rounding to 1e-6 time units so
distributions over floats are well-defined.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .model import AgentId, FlowPlan, Network, ProductId
from .simulator import SimulationOutcome

DEFAULT_LATENESS_WEIGHT = 1e5

_BUCKET = 1e-6

MonitoredPair = tuple[AgentId, ProductId]


def _bucket(delay: float) -> float:
    return round(delay / _BUCKET) * _BUCKET


def lateness_distribution(
    plan: FlowPlan,
    outcome: SimulationOutcome,
    monitored: set[MonitoredPair] | None = None,
) -> list[tuple[float, float]]:
    """Share of delivered quantity per distinct delay, one simulation round.

    Counts every realized flow part whose (receiver, product) is in
    ``monitored`` (all parts when None). Shares are quantity-weighted and
    sum to 1.
    """
    mass: dict[float, float] = {}
    total = 0.0
    for part in outcome.parts:
        if monitored is not None and (part.receiver, part.product) not in monitored:
            continue
        key = _bucket(part.lateness)
        mass[key] = mass.get(key, 0.0) + part.quantity
        total += part.quantity
    if total <= 0.0:
        raise ValueError("lateness distribution over an empty monitored flow set")
    return [(delay, mass[delay] / total) for delay in sorted(mass)]


@dataclass(frozen=True)
class ObjectiveSummary:
    production_cost: float
    lateness: float
    objective: float


def aggregate_objectives(
    pairs: Iterable[tuple[float, float]],
    lateness_weight: float = DEFAULT_LATENESS_WEIGHT,
) -> ObjectiveSummary:
    """Combine per-demand-agent (cost, lateness) pairs into one objective.

    The objective is total cost plus the lateness penalty weight times
    total lateness.
    """
    cost = 0.0
    late = 0.0
    for c, l in pairs:
        cost += c
        late += l
    return ObjectiveSummary(production_cost=cost, lateness=late, objective=cost + lateness_weight * late)


def plan_objective_pairs(
    network: Network,
    plan: FlowPlan,
    monitored: Iterable[MonitoredPair],
) -> list[tuple[float, float]]:
    """Deterministic (cost, lateness) per monitored (receiver, product).

    Cost prices every planned flow into the pair at the supplier's unit
    income; lateness compares each slice's promised arrival with the
    receiver's required time.
    """
    out: list[tuple[float, float]] = []
    for receiver, product in sorted(set(monitored)):
        required = network.required_time(receiver, product)
        cost = 0.0
        late = 0.0
        for (z, _, _), entry in plan.inflows(receiver, product):
            price = network.agents[z].produces[product].unit_income
            cost += price * entry.quantity
            if required is not None:
                late += max(entry.arrival - required, 0.0)
                if entry.over_quantity > 0.0 and entry.over_arrival is not None:
                    late += max(entry.over_arrival - required, 0.0)
        out.append((cost, late))
    return out


def customer_service_metrics(network: Network, outcome: SimulationOutcome) -> tuple[float, float]:
    """(total unmet customer demand, total customer delivery lateness)."""
    unmet = sum(outcome.unmet.values())
    lateness = 0.0
    for part in outcome.parts:
        if network.agents[part.receiver].kind == "customer":
            lateness += part.lateness
    return unmet, lateness


def mean_total_lateness(
    outcomes: Sequence[SimulationOutcome],
    monitored: set[MonitoredPair] | None = None,
) -> float:
    """Mean over rounds of quantity-weighted total lateness."""
    if not outcomes:
        raise ValueError("no simulation outcomes")
    return sum(o.total_lateness(monitored) for o in outcomes) / len(outcomes)


def write_distribution_csv(
    path: str | Path,
    outcomes: Sequence[SimulationOutcome],
    plan: FlowPlan,
    monitored: set[MonitoredPair] | None = None,
) -> None:
    """One row per (round, delay, share), rounds and delays ascending."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["round", "delay", "share"])
        for outcome in outcomes:
            for delay, share in lateness_distribution(plan, outcome, monitored):
                writer.writerow([outcome.round_index, f"{delay:.6f}", f"{share:.9f}"])


def write_summary_json(path: str | Path, summary: Mapping[str, Any]) -> None:
    """Canonical JSON dump (sorted keys, stable float repr)."""
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
