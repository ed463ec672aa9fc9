"""Re-planning protocol: notices, requests, rounds, propagation, trace."""

from __future__ import annotations

import json

import pytest

from scenarios import chain_dict, scenario_from, three_tier_dict, two_supplier_dict
from scnreplan.model import (
    Agent,
    Disruption,
    FlowEntry,
    FlowPlan,
    Gaussian,
    Network,
    StochasticProfile,
    dumps_plan,
)
from scnreplan.protocol import (
    UnmetRecord,
    _merge_entry,
    build_requests,
    identify_disruption,
    run_replanning,
)


def _micro_network(deadline=16.0):
    agents = {
        "S": Agent(
            id="S",
            kind="tier_supplier",
            profile=StochasticProfile(lead_time={("J", "p"): Gaussian(10.0)}),
        ),
        "J": Agent(id="J", kind="customer", deadlines={"p": deadline}),
    }
    return Network(agents=agents, edges=frozenset({("S", "J", "p")}))


def _micro_plan(quantity=5.0, arrival=10.0):
    return FlowPlan(entries={("S", "J", "p"): FlowEntry(quantity=quantity, arrival=arrival)})


# ---------------------------------------------------------------------------
# notices and requests
# ---------------------------------------------------------------------------


def test_notice_arrival_shifts_by_scaled_mean_lead():
    notices = identify_disruption(_micro_network(), _micro_plan(), Disruption("S", 0.6))
    assert len(notices) == 1
    n = notices[0]
    assert (n.supplier, n.receiver, n.product) == ("S", "J", "p")
    assert n.new_arrival == pytest.approx(16.0, abs=1e-12)


def test_notices_cover_outflows_even_at_scale_zero():
    notices = identify_disruption(_micro_network(), _micro_plan(), Disruption("S", 0.0))
    assert len(notices) == 1
    assert notices[0].new_arrival == pytest.approx(10.0)


def test_customer_disruption_has_no_notices():
    scenario = scenario_from(chain_dict())
    notices = identify_disruption(scenario.network, scenario.initial_plan, Disruption("C", 1.0))
    assert notices == []


def test_request_needs_strictly_missed_deadline():
    net = _micro_network(deadline=16.0)
    plan = _micro_plan(quantity=5.0)
    exactly = identify_disruption(net, plan, Disruption("S", 0.6))
    assert build_requests(net, plan, exactly) == []

    tight = _micro_network(deadline=15.9)
    missed = identify_disruption(tight, plan, Disruption("S", 0.6))
    requests = build_requests(tight, plan, missed)
    assert len(requests) == 1
    req = requests[0]
    assert req.demand_agent == "J"
    assert req.product == "p"
    # the whole original flow is re-sourced, due at the original required time
    assert req.quantity == pytest.approx(5.0)
    assert req.deadline == pytest.approx(15.9)


def test_receiver_without_required_time_is_not_a_demand_agent():
    net = _micro_network()
    agents = dict(net.agents)
    agents["J"] = Agent(id="J", kind="oem")  # no deadline, no consuming production
    loose = Network(agents=agents, edges=net.edges)
    notices = identify_disruption(loose, _micro_plan(), Disruption("S", 2.0))
    assert build_requests(loose, _micro_plan(), notices) == []


# ---------------------------------------------------------------------------
# plan merge rule
# ---------------------------------------------------------------------------


def test_merge_sums_quantities_and_keeps_later_arrival():
    entries = {("Z", "D", "p"): FlowEntry(2.0, 4.0)}
    merged = _merge_entry(
        entries, ("Z", "D", "p"), FlowEntry(8.0, 3.5, over_quantity=1.0, over_arrival=6.0)
    )
    assert merged == FlowEntry(10.0, 4.0, over_quantity=1.0, over_arrival=6.0)
    assert entries[("Z", "D", "p")] == merged


def test_merge_into_empty_slot_is_identity():
    entries = {}
    new = FlowEntry(3.0, 2.0)
    assert _merge_entry(entries, ("Z", "D", "p"), new) == new


# ---------------------------------------------------------------------------
# full runs on the zero-spread fixtures
# ---------------------------------------------------------------------------


def test_scale_zero_returns_plan_unchanged():
    scenario = scenario_from(chain_dict())
    plan, trace = run_replanning(
        scenario.network,
        scenario.initial_plan,
        Disruption("S", 0.0),
        scenario.saa,
    )
    assert trace.triggered is False
    assert trace.rounds == ()
    assert dumps_plan(plan) == dumps_plan(scenario.initial_plan)


def test_announced_delay_kept_when_no_deadline_is_missed():
    # v' = 5 + 0.2 * 5 = 6.0 hits the production start exactly: no request,
    # but the unrepaired flow keeps its announced later arrival
    scenario = scenario_from(chain_dict())
    plan, trace = run_replanning(
        scenario.network,
        scenario.initial_plan,
        Disruption("S", 0.2),
        scenario.saa,
    )
    assert trace.triggered is False
    assert plan.entries[("S", "A", "part")] == FlowEntry(8.0, 6.0)
    assert plan.entries[("A", "C", "widget")] == scenario.initial_plan.entries[("A", "C", "widget")]


def test_chain_resources_from_the_disrupted_supplier_itself():
    scenario = scenario_from(chain_dict())
    plan, trace = run_replanning(
        scenario.network,
        scenario.initial_plan,
        scenario.disruption,
        scenario.saa,
    )
    assert trace.triggered is True
    assert len(trace.rounds) == 1
    rnd = trace.rounds[0]
    assert [(r.demand_agent, r.product, r.quantity, r.deadline) for r in rnd.requests] == [
        ("A", "part", 8.0, 6.0)
    ]
    # the only candidate is the disrupted supplier quoting its degraded lead
    assert [resp.supplier for resp in rnd.responses] == ["S"]
    offer = rnd.responses[0].lines[0]
    assert offer.within_quantity == pytest.approx(8.0, abs=1e-9)
    assert offer.within_arrival == pytest.approx(10.0, abs=1e-9)
    decision = rnd.selections[0]
    assert decision.cost == pytest.approx(40.0, abs=1e-6)
    assert decision.lateness["part"] == pytest.approx(4.0, abs=1e-9)
    assert plan.entries[("S", "A", "part")] == FlowEntry(8.0, 10.0)
    assert rnd.unmet == ()


def test_two_suppliers_switch_fully_under_both_attitudes():
    scenario = scenario_from(two_supplier_dict())
    for attitude in ("neutral", "averse"):
        overrides = {a: attitude for a in scenario.network.agents}
        plan, trace = run_replanning(
            scenario.network,
            scenario.initial_plan,
            scenario.disruption,
            scenario.saa,
            attitudes=overrides,
        )
        assert trace.triggered is True
        assert ("SB", "A", "part") not in plan.entries
        assert plan.entries[("SG", "A", "part")] == FlowEntry(8.0, 3.0)
        decision = trace.rounds[0].selections[0]
        assert decision.unmet["part"] == pytest.approx(0.0, abs=1e-9)


def test_selected_flow_merges_with_an_existing_one():
    raw = two_supplier_dict()
    raw["initial_plan"].append(
        {"from": "SG", "to": "A", "product": "part", "quantity": 2.0, "arrival": 4.0}
    )
    scenario = scenario_from(raw)
    plan, trace = run_replanning(
        scenario.network,
        scenario.initial_plan,
        scenario.disruption,
        scenario.saa,
    )
    # ordered 8 on top of the planned 2; the promise keeps the later slice
    assert plan.entries[("SG", "A", "part")] == FlowEntry(10.0, 4.0)
    # the inform announces the newly ordered slice, not the folded plan entry
    inform = trace.rounds[0].informs[0]
    assert (inform.supplier, inform.receiver, inform.product) == ("SG", "A", "part")
    assert inform.quantity == pytest.approx(8.0)
    assert inform.arrival == pytest.approx(3.0)


def test_shortfall_is_recorded_when_offers_cannot_cover_demand():
    raw = two_supplier_dict()
    for agent in raw["agents"]:
        if agent["id"] == "SB":
            agent["stochastic"]["production"]["part"] = {"mean": 0.0, "std": 0.0}
        if agent["id"] == "SG":
            agent["stochastic"]["production"]["part"] = {"mean": 5.0, "std": 0.0}
    scenario = scenario_from(raw)
    plan, trace = run_replanning(
        scenario.network,
        scenario.initial_plan,
        scenario.disruption,
        scenario.saa,
    )
    assert plan.entries[("SG", "A", "part")].quantity == pytest.approx(5.0, abs=1e-9)
    assert trace.all_unmet() == [UnmetRecord("A", "part", pytest.approx(3.0), 6.0, "shortfall")]


def test_three_tier_propagates_demand_upstream():
    scenario = scenario_from(three_tier_dict())
    plan, trace = run_replanning(
        scenario.network,
        scenario.initial_plan,
        scenario.disruption,
        scenario.saa,
    )
    assert trace.triggered is True
    assert len(trace.rounds) == 2

    first = trace.rounds[0]
    assert [(r.demand_agent, r.product, r.quantity, r.deadline) for r in first.requests] == [
        ("A", "part", 8.0, 8.0)
    ]
    assert [resp.supplier for resp in first.responses] == ["M", "SB"]
    assert first.selections[0].lines[0].supplier == "M"

    second = trace.rounds[1]
    # component demand is due when M must start producing: 4 - 3 - 1 = 0
    assert [(r.demand_agent, r.product, r.quantity, r.deadline) for r in second.requests] == [
        ("M", "raw", 8.0, 0.0)
    ]
    assert second.selections[0].cost == pytest.approx(16.0, abs=1e-6)
    assert second.selections[0].lateness["raw"] == pytest.approx(2.0, abs=1e-9)

    assert sorted(plan.entries) == [("A", "C", "widget"), ("M", "A", "part"), ("R", "M", "raw")]
    assert plan.entries[("M", "A", "part")] == FlowEntry(8.0, 4.0)
    assert plan.entries[("R", "M", "raw")] == FlowEntry(8.0, 2.0)
    # the untouched downstream flow is byte-for-byte the original entry
    assert plan.entries[("A", "C", "widget")] == scenario.initial_plan.entries[("A", "C", "widget")]


def test_missing_upstream_supplier_yields_no_candidates_record():
    raw = three_tier_dict()
    raw["agents"] = [a for a in raw["agents"] if a["id"] != "R"]
    raw["edges"] = [e for e in raw["edges"] if e["from"] != "R"]
    del raw["trust"]["M"]
    scenario = scenario_from(raw)
    plan, trace = run_replanning(
        scenario.network,
        scenario.initial_plan,
        scenario.disruption,
        scenario.saa,
    )
    assert len(trace.rounds) == 2
    last = trace.rounds[1]
    assert last.responses == ()
    assert last.selections == ()
    assert last.unmet == (UnmetRecord("M", "raw", pytest.approx(8.0), 0.0, "no-candidates"),)
    # the part order itself still went through
    assert plan.entries[("M", "A", "part")] == FlowEntry(8.0, 4.0)


def test_request_conservation_across_selections():
    scenario = scenario_from(three_tier_dict())
    _, trace = run_replanning(
        scenario.network,
        scenario.initial_plan,
        scenario.disruption,
        scenario.saa,
    )
    for rnd in trace.rounds:
        for decision in rnd.selections:
            ordered: dict[str, float] = {}
            for line in decision.lines:
                ordered[line.product] = ordered.get(line.product, 0.0) + line.quantity
            for req in rnd.requests:
                if req.demand_agent != decision.demand_agent:
                    continue
                total = ordered.get(req.product, 0.0) + decision.unmet.get(req.product, 0.0)
                assert total == pytest.approx(req.quantity, abs=1e-9)


def test_trace_is_reproducible_and_json_serializable():
    scenario = scenario_from(three_tier_dict())
    runs = [
        run_replanning(
            scenario.network, scenario.initial_plan, scenario.disruption, scenario.saa
        )
        for _ in range(2)
    ]
    (plan_a, trace_a), (plan_b, trace_b) = runs
    assert dumps_plan(plan_a) == dumps_plan(plan_b)
    assert trace_a.to_dict() == trace_b.to_dict()
    text = json.dumps(trace_a.to_dict(), sort_keys=True)
    assert json.loads(text) == trace_a.to_dict()


def test_attitude_override_rejects_unknown_value():
    scenario = scenario_from(chain_dict())
    with pytest.raises(ValueError, match="risk attitude"):
        run_replanning(
            scenario.network,
            scenario.initial_plan,
            scenario.disruption,
            scenario.saa,
            attitudes={"A": "bold"},
        )
