"""Distributed re-planning: notify, request, respond, select, propagate.

A lead-time disruption at one agent stretches the arrival of every flow it
ships. Receivers whose production start (or delivery deadline) would be
missed become demand agents and re-source the whole affected flow from the
candidate suppliers of that product; the disrupted agent itself stays a
candidate, quoting its degraded lead time. Each round, candidate suppliers
answer all requests jointly, each demand agent selects among the responses,
and the selected commitments are written into the plan. Suppliers whose new
commitments consume components then become demand agents themselves, so the
process walks upstream and terminates in an acyclic network.

All messages of every round are collected into a JSON-serializable trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .messages import DemandRequest, SelectionDecision, SupplierResponse
from .model import (
    AgentId,
    Disruption,
    FlowEntry,
    FlowKey,
    FlowPlan,
    Network,
    ProductId,
    SaaConfig,
)
from .optimizer import DumpHook, solve_supplier_response, solve_supplier_selection
from .sampling import make_realizations, stream

_EPS = 1e-9

RISK_ATTITUDES = ("neutral", "averse")


class ProtocolError(RuntimeError):
    """Internal protocol invariant broken (e.g. rounds not moving upstream)."""


@dataclass(frozen=True)
class DisruptionNotice:
    """New arrival time announced by the disrupted agent for one flow."""

    supplier: AgentId
    receiver: AgentId
    product: ProductId
    new_arrival: float


@dataclass(frozen=True)
class UnmetRecord:
    """Demand that re-planning could not place with any supplier."""

    demand_agent: AgentId
    product: ProductId
    quantity: float
    deadline: float
    reason: str  # "no-candidates" or "shortfall"


@dataclass(frozen=True)
class Inform:
    """One newly selected commitment, as folded into the plan."""

    supplier: AgentId
    receiver: AgentId
    product: ProductId
    quantity: float
    arrival: float
    over_quantity: float
    over_arrival: float | None


@dataclass(frozen=True)
class RoundTrace:
    round_index: int
    requests: tuple[DemandRequest, ...]
    responses: tuple[SupplierResponse, ...]
    selections: tuple[SelectionDecision, ...]
    informs: tuple[Inform, ...]
    unmet: tuple[UnmetRecord, ...]


@dataclass(frozen=True)
class ReplanTrace:
    triggered: bool
    rounds: tuple[RoundTrace, ...] = ()

    def all_unmet(self) -> list[UnmetRecord]:
        return [u for r in self.rounds for u in r.unmet]

    def to_dict(self) -> dict[str, Any]:
        return {
            "triggered": self.triggered,
            "rounds": [
                {
                    "round": r.round_index,
                    "requests": [
                        {
                            "demand_agent": q.demand_agent,
                            "product": q.product,
                            "quantity": q.quantity,
                            "deadline": q.deadline,
                        }
                        for q in r.requests
                    ],
                    "responses": [
                        {
                            "supplier": resp.supplier,
                            "objective": resp.objective,
                            "lines": [
                                {
                                    "demand_agent": line.demand_agent,
                                    "product": line.product,
                                    "within_quantity": line.within_quantity,
                                    "over_quantity": line.over_quantity,
                                    "within_arrival": line.within_arrival,
                                    "over_arrival": line.over_arrival,
                                }
                                for line in resp.lines
                            ],
                        }
                        for resp in r.responses
                    ],
                    "selections": [
                        {
                            "demand_agent": dec.demand_agent,
                            "objective": dec.objective,
                            "cost": dec.cost,
                            "unmet": dict(sorted(dec.unmet.items())),
                            "lateness": dict(sorted(dec.lateness.items())),
                            "lines": [
                                {
                                    "supplier": line.supplier,
                                    "product": line.product,
                                    "quantity": line.quantity,
                                    "over_quantity": line.over_quantity,
                                    "within_arrival": line.within_arrival,
                                    "over_arrival": line.over_arrival,
                                }
                                for line in dec.lines
                            ],
                        }
                        for dec in r.selections
                    ],
                    "informs": [
                        {
                            "from": inf.supplier,
                            "to": inf.receiver,
                            "product": inf.product,
                            "quantity": inf.quantity,
                            "arrival": inf.arrival,
                            "over_quantity": inf.over_quantity,
                            "over_arrival": inf.over_arrival,
                        }
                        for inf in r.informs
                    ],
                    "unmet": [
                        {
                            "demand_agent": u.demand_agent,
                            "product": u.product,
                            "quantity": u.quantity,
                            "deadline": u.deadline,
                            "reason": u.reason,
                        }
                        for u in r.unmet
                    ],
                }
                for r in self.rounds
            ],
        }


def identify_disruption(network: Network, plan: FlowPlan, disruption: Disruption) -> list[DisruptionNotice]:
    """New arrival times for every flow out of the disrupted agent.

    The planned arrival slips by the disruption scale times the mean lead
    time of the edge. An agent without outgoing flows yields an empty list.
    """
    agent = network.agents[disruption.agent]
    notices = []
    for (z, j, k), entry in plan.outflows(disruption.agent):
        mean_lead = agent.profile.lead_time[(j, k)].mean
        notices.append(
            DisruptionNotice(
                supplier=z,
                receiver=j,
                product=k,
                new_arrival=entry.arrival + disruption.lead_time_scale * mean_lead,
            )
        )
    return notices


def build_requests(network: Network, plan: FlowPlan, notices: Sequence[DisruptionNotice]) -> list[DemandRequest]:
    """Requests from every receiver whose required time is now missed.

    A notice triggers a request only if the new arrival is strictly later
    than the receiver's required time (earliest consuming production start,
    or the delivery deadline for customers). The whole original flow is
    re-sourced.
    """
    requests = []
    for notice in sorted(notices, key=lambda n: (n.receiver, n.product)):
        required = network.required_time(notice.receiver, notice.product)
        if required is None or notice.new_arrival <= required:
            continue
        quantity = plan.entries[(notice.supplier, notice.receiver, notice.product)].quantity
        if quantity <= _EPS:
            continue
        requests.append(
            DemandRequest(
                demand_agent=notice.receiver,
                product=notice.product,
                quantity=quantity,
                deadline=required,
            )
        )
    return requests


def _merge_entry(entries: dict[FlowKey, FlowEntry], key: FlowKey, new: FlowEntry) -> FlowEntry:
    """Add a flow to the plan, folding into an existing entry on the same
    edge (quantities add; the promised arrival keeps the later slice)."""
    old = entries.get(key)
    if old is None:
        entries[key] = new
        return new
    over_arrivals = [t for t in (old.over_arrival, new.over_arrival) if t is not None]
    merged = FlowEntry(
        quantity=old.quantity + new.quantity,
        arrival=max(old.arrival, new.arrival),
        over_quantity=old.over_quantity + new.over_quantity,
        over_arrival=max(over_arrivals) if over_arrivals else None,
    )
    entries[key] = merged
    return merged


def _attitude(network: Network, overrides: Mapping[AgentId, str] | None, agent_id: AgentId) -> str:
    if overrides and agent_id in overrides:
        value = overrides[agent_id]
    else:
        value = network.agents[agent_id].risk_attitude
    if value not in RISK_ATTITUDES:
        raise ValueError(f"agent {agent_id!r}: unknown risk attitude {value!r}")
    return value


def run_replanning(
    network: Network,
    plan: FlowPlan,
    disruption: Disruption,
    cfg: SaaConfig,
    attitudes: Mapping[AgentId, str] | None = None,
    dump: DumpHook | None = None,
) -> tuple[FlowPlan, ReplanTrace]:
    """Re-plan flows after the disruption; returns the new plan and trace.

    ``attitudes`` overrides per-agent risk attitudes for this run. Each
    round samples fresh realizations (labeled by round) for supplier
    responses and fresh trust perturbations per demand agent, all derived
    from ``cfg.seed``; identical inputs reproduce the identical trace.
    """
    notices = identify_disruption(network, plan, disruption)
    requests = build_requests(network, plan, notices)
    entries = dict(plan.entries)

    # the affected flows are abandoned and re-sourced in full
    for req in requests:
        entries.pop((disruption.agent, req.demand_agent, req.product), None)
    # remaining flows from the disrupted agent keep their announced arrivals
    profile = network.agents[disruption.agent].profile
    for notice in notices:
        key = (notice.supplier, notice.receiver, notice.product)
        old = entries.get(key)
        if old is None:
            continue
        over_arrival = old.over_arrival
        if over_arrival is not None:
            beta = profile.over_delay_factor.get((notice.receiver, notice.product), 1.0)
            mean_lead = profile.lead_time[(notice.receiver, notice.product)].mean
            over_arrival = over_arrival + disruption.lead_time_scale * mean_lead * beta
        entries[key] = FlowEntry(
            quantity=old.quantity,
            arrival=notice.new_arrival,
            over_quantity=old.over_quantity,
            over_arrival=over_arrival,
        )

    if not requests:
        return FlowPlan(entries=entries), ReplanTrace(triggered=False)

    rounds: list[RoundTrace] = []
    round_index = 0
    while requests:
        if round_index >= len(network.agents):
            raise ProtocolError("re-planning did not move strictly upstream; network must be acyclic")

        realizations = make_realizations(network, cfg, disruption, round_index)
        unmet_records: list[UnmetRecord] = []
        active: list[DemandRequest] = []
        by_supplier: dict[AgentId, list[DemandRequest]] = {}
        for req in sorted(requests, key=lambda r: (r.demand_agent, r.product)):
            candidates = network.suppliers_of(req.demand_agent, req.product)
            if not candidates:
                unmet_records.append(
                    UnmetRecord(req.demand_agent, req.product, req.quantity, req.deadline, "no-candidates")
                )
                continue
            active.append(req)
            for z in candidates:
                by_supplier.setdefault(z, []).append(req)

        responses = [
            solve_supplier_response(
                network,
                supplier,
                by_supplier[supplier],
                realizations,
                _attitude(network, attitudes, supplier),
                dump=dump,
            )
            for supplier in sorted(by_supplier)
        ]

        selections: list[SelectionDecision] = []
        for demand_agent in sorted({r.demand_agent for r in active}):
            agent_requests = [r for r in active if r.demand_agent == demand_agent]
            rng = stream(cfg.seed, "selection-trust", round_index, demand_agent)
            decision = solve_supplier_selection(
                network,
                demand_agent,
                agent_requests,
                responses,
                cfg.sample_count,
                rng,
                _attitude(network, attitudes, demand_agent),
                dump=dump,
            )
            selections.append(decision)
            deadlines = {r.product: r.deadline for r in agent_requests}
            for product in sorted(decision.unmet):
                missing = decision.unmet[product]
                if missing > _EPS:
                    unmet_records.append(
                        UnmetRecord(demand_agent, product, missing, deadlines[product], "shortfall")
                    )

        informs: list[Inform] = []
        # ship-time implied by each commitment, per supplier and product
        needed_by: dict[tuple[AgentId, ProductId], float] = {}
        committed: dict[tuple[AgentId, ProductId], float] = {}
        for decision in selections:
            for line in decision.lines:
                key = (line.supplier, decision.demand_agent, line.product)
                entry = FlowEntry(
                    quantity=line.quantity,
                    arrival=line.within_arrival,
                    over_quantity=line.over_quantity,
                    over_arrival=line.over_arrival if line.over_quantity > _EPS else None,
                )
                _merge_entry(entries, key, entry)
                informs.append(
                    Inform(
                        supplier=line.supplier,
                        receiver=decision.demand_agent,
                        product=line.product,
                        quantity=entry.quantity,
                        arrival=entry.arrival,
                        over_quantity=entry.over_quantity,
                        over_arrival=entry.over_arrival,
                    )
                )
                supplier = network.agents[line.supplier]
                mean_lead = supplier.profile.lead_time[(decision.demand_agent, line.product)].mean
                start = supplier.profile.start_time.get(line.product)
                mean_start = start.mean if start is not None else 0.0
                ship_deadline = max(line.within_arrival - mean_lead - mean_start, 0.0)
                ck = (line.supplier, line.product)
                committed[ck] = committed.get(ck, 0.0) + line.quantity
                needed_by[ck] = min(needed_by.get(ck, float("inf")), ship_deadline)

        next_requests: dict[tuple[AgentId, ProductId], DemandRequest] = {}
        for (supplier, product) in sorted(committed):
            bom = network.agents[supplier].bom.get(product, {})
            for component in sorted(bom):
                amount = bom[component] * committed[(supplier, product)]
                if amount <= _EPS:
                    continue
                key = (supplier, component)
                prev = next_requests.get(key)
                if prev is None:
                    next_requests[key] = DemandRequest(
                        demand_agent=supplier,
                        product=component,
                        quantity=amount,
                        deadline=needed_by[(supplier, product)],
                    )
                else:
                    next_requests[key] = DemandRequest(
                        demand_agent=supplier,
                        product=component,
                        quantity=prev.quantity + amount,
                        deadline=min(prev.deadline, needed_by[(supplier, product)]),
                    )

        rounds.append(
            RoundTrace(
                round_index=round_index,
                requests=tuple(sorted(requests, key=lambda r: (r.demand_agent, r.product))),
                responses=tuple(responses),
                selections=tuple(selections),
                informs=tuple(sorted(informs, key=lambda i: (i.supplier, i.receiver, i.product))),
                unmet=tuple(unmet_records),
            )
        )
        requests = list(next_requests.values())
        round_index += 1

    return FlowPlan(entries=entries), ReplanTrace(triggered=True, rounds=tuple(rounds))
