"""Seeded discrete-event evaluation of a flow plan under stochastic lead times.

Agents are processed suppliers-first. A product with no component inputs
ships at the producer's sampled start time; a product with inputs starts
production once every component inflow has arrived (never before its
planned start) and each outflow then arrives after a freshly sampled lead
time. The slice of a flow committed above nominal capacity travels with the
lead time stretched by the edge's delay factor. Quantities are carried
through unchanged: only times are stochastic out-of-sample.

An active disruption stretches the disrupted agent's sampled lead-time
means by ``1 + scale`` in every plan evaluated under it, matching the
planning-side distributions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .model import AgentId, Disruption, FlowPlan, Network, ProductId, topological_order
from .sampling import sample_gaussian_trunc, stream

_EPS = 1e-9


class SimulationError(RuntimeError):
    """The plan cannot be simulated (e.g. a component inflow is missing)."""


@dataclass(frozen=True)
class FlowPartOutcome:
    """Realized delivery of one slice of a planned flow."""

    supplier: AgentId
    receiver: AgentId
    product: ProductId
    part: str  # "within" or "over"
    quantity: float
    arrival: float
    lateness: float


@dataclass(frozen=True)
class SimulationOutcome:
    round_index: int
    parts: tuple[FlowPartOutcome, ...]
    starts: dict[tuple[AgentId, ProductId], float]
    unmet: dict[AgentId, float]

    def total_lateness(self, monitored: set[tuple[AgentId, ProductId]] | None = None) -> float:
        """Quantity-weighted lateness over the monitored (receiver, product)
        pairs (all parts when ``monitored`` is None)."""
        total = 0.0
        for part in self.parts:
            if monitored is None or (part.receiver, part.product) in monitored:
                total += part.quantity * part.lateness
        return total


def simulate_round(
    network: Network,
    plan: FlowPlan,
    disruption: Disruption | None,
    seed: int,
    round_index: int = 0,
    demand: Mapping[tuple[AgentId, ProductId], float] | None = None,
) -> SimulationOutcome:
    """One seeded realization of the plan's deliveries.

    Per agent, draws are consumed in a fixed order (start times for its
    input-free products sorted by product, then one lead draw per outflow
    sorted by key), so outcomes are reproducible and aligned across
    disruption scales. ``demand`` optionally gives per-(customer, product)
    quantities to measure shortfalls against; without it unmet is zero.
    """
    scale = disruption.lead_time_scale if disruption is not None else 0.0
    disrupted = disruption.agent if disruption is not None else None

    arrived: dict[tuple[AgentId, AgentId, ProductId], float] = {}
    parts: list[FlowPartOutcome] = []
    starts: dict[tuple[AgentId, ProductId], float] = {}

    for agent_id in topological_order(network):
        agent = network.agents[agent_id]
        outflows = plan.outflows(agent_id)
        if not outflows:
            continue
        rng = stream(seed, "sim", round_index, agent_id)
        inflows = plan.inflows(agent_id)
        products = sorted({key[2] for key, _ in outflows})

        for product in products:
            inputs = agent.bom.get(product, {})
            if inputs:
                latest = 0.0
                for component in sorted(inputs):
                    feeding = [key for key, _ in inflows if key[2] == component]
                    if not feeding:
                        raise SimulationError(
                            f"agent {agent_id!r}: no planned inflow of component {component!r}"
                            f" needed to produce {product!r}"
                        )
                    latest = max(latest, max(arrived[key] for key in feeding))
                start = max(agent.planned_start.get(product, 0.0), latest)
            else:
                g = agent.profile.start_time.get(product)
                start = sample_gaussian_trunc(g.mean, g.std, rng) if g is not None else 0.0
            starts[(agent_id, product)] = start

        lead_factor = 1.0 + scale if agent_id == disrupted else 1.0
        for key, entry in outflows:
            _, receiver, product = key
            g = agent.profile.lead_time[(receiver, product)]
            lead = sample_gaussian_trunc(g.mean * lead_factor, g.std, rng)
            start = starts[(agent_id, product)]
            required = network.required_time(receiver, product)
            beta = agent.profile.over_delay_factor.get((receiver, product), 1.0)

            within_quantity = entry.quantity - entry.over_quantity
            within_arrival = start + lead
            over_arrival = start + lead * beta
            entry_done = within_arrival
            if within_quantity > _EPS:
                parts.append(
                    FlowPartOutcome(
                        supplier=agent_id,
                        receiver=receiver,
                        product=product,
                        part="within",
                        quantity=within_quantity,
                        arrival=within_arrival,
                        lateness=max(within_arrival - required, 0.0) if required is not None else 0.0,
                    )
                )
            if entry.over_quantity > _EPS:
                entry_done = max(entry_done, over_arrival)
                parts.append(
                    FlowPartOutcome(
                        supplier=agent_id,
                        receiver=receiver,
                        product=product,
                        part="over",
                        quantity=entry.over_quantity,
                        arrival=over_arrival,
                        lateness=max(over_arrival - required, 0.0) if required is not None else 0.0,
                    )
                )
            # the receiver can start consuming once the whole flow is in
            arrived[key] = entry_done

    unmet: dict[AgentId, float] = {}
    for agent_id in sorted(network.agents):
        agent = network.agents[agent_id]
        if agent.kind != "customer":
            continue
        short = 0.0
        for product in sorted(agent.deadlines):
            received = sum(e.quantity for key, e in plan.inflows(agent_id, product))
            wanted = demand.get((agent_id, product), 0.0) if demand is not None else 0.0
            short += max(wanted - received, 0.0)
        unmet[agent_id] = short

    return SimulationOutcome(round_index=round_index, parts=tuple(parts), starts=starts, unmet=unmet)


def simulate_many(
    network: Network,
    plan: FlowPlan,
    rounds: int,
    seed: int,
    disruption: Disruption | None = None,
    demand: Mapping[tuple[AgentId, ProductId], float] | None = None,
) -> list[SimulationOutcome]:
    """Independent seeded rounds, returned in round order."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    return [
        simulate_round(network, plan, disruption, seed, round_index=i, demand=demand)
        for i in range(rounds)
    ]
