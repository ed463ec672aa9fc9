"""Domain model: agents, network, product flows, disruptions, scenario files.

A scenario file is a JSON document with exactly these top-level keys:

- ``agents``: list of agent objects (id, kind, produces, bom, planned_start,
  deadlines, stochastic, risk_attitude, weights, rewards)
- ``edges``: list of ``{"from", "to", "product"}`` supply relations
- ``trust``: nested map  demand agent id -> supplier id -> sigma  (>= 0)
- ``initial_plan``: list of committed flows ``{"from", "to", "product",
  "quantity", "arrival"}``
- ``disruption``: ``{"agent", "lead_time_scale", "detection_time"}``
- ``saa``: ``{"sample_count", "seed"}``
- ``weights_defaults``: optional fallback for per-agent weights

Unknown keys, dangling ids, non-finite numbers, negative times and cyclic
supply relations are rejected with messages naming the offending entry.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

AgentId = str
ProductId = str

AGENT_KINDS = frozenset({"customer", "distributor", "oem", "tier_supplier", "transporter"})
RISK_ATTITUDES = frozenset({"neutral", "averse"})

DEFAULT_LATENESS_WEIGHT = 1e5
DEFAULT_UNMET_WEIGHT = 1e5


class ScenarioParseError(ValueError):
    """Malformed scenario file (bad JSON, wrong shapes, unknown keys)."""


class ScenarioValidationError(ValueError):
    """Structurally valid file that breaks a model invariant."""


@dataclass(frozen=True)
class Gaussian:
    """Mean/spread pair for a nonnegative quantity (sampling truncates at 0)."""

    mean: float
    std: float = 0.0


@dataclass(frozen=True)
class ProduceSpec:
    capacity: float
    unit_income: float
    unit_cost: float


@dataclass(frozen=True)
class StochasticProfile:
    """Per-agent uncertainty: production volume, lead times, start times.

    ``lead_time`` and ``over_delay_factor`` are keyed by (receiver, product);
    the factor stretches the lead time of over-capacity deliveries and is
    never below 1.
    """

    production: dict[ProductId, Gaussian] = field(default_factory=dict)
    lead_time: dict[tuple[AgentId, ProductId], Gaussian] = field(default_factory=dict)
    start_time: dict[ProductId, Gaussian] = field(default_factory=dict)
    over_delay_factor: dict[tuple[AgentId, ProductId], float] = field(default_factory=dict)


@dataclass(frozen=True)
class RiskWeights:
    supplier_reward: float = 1.0
    supplier_risk: float = 1.0
    lateness: float = DEFAULT_LATENESS_WEIGHT
    unmet: float = DEFAULT_UNMET_WEIGHT


@dataclass(frozen=True)
class Rewards:
    """Unitless importance of an agent as a customer of its suppliers."""

    demand_fill: float = 1.0
    on_time: float = 1.0


@dataclass(frozen=True)
class Agent:
    id: AgentId
    kind: str
    produces: dict[ProductId, ProduceSpec] = field(default_factory=dict)
    bom: dict[ProductId, dict[ProductId, float]] = field(default_factory=dict)
    planned_start: dict[ProductId, float] = field(default_factory=dict)
    deadlines: dict[ProductId, float] = field(default_factory=dict)
    profile: StochasticProfile = field(default_factory=StochasticProfile)
    risk_attitude: str = "neutral"
    weights: RiskWeights = field(default_factory=RiskWeights)
    rewards: Rewards = field(default_factory=Rewards)


@dataclass(frozen=True)
class FlowEntry:
    """One committed flow: quantity and promised arrival time.

    ``over_quantity`` is the slice of ``quantity`` produced above nominal
    capacity; it travels with the stretched lead time and its own promised
    arrival.
    """

    quantity: float
    arrival: float
    over_quantity: float = 0.0
    over_arrival: float | None = None


FlowKey = tuple[AgentId, AgentId, ProductId]


@dataclass(frozen=True)
class FlowPlan:
    entries: dict[FlowKey, FlowEntry] = field(default_factory=dict)

    def inflows(self, agent: AgentId, product: ProductId | None = None) -> list[tuple[FlowKey, FlowEntry]]:
        out = []
        for key in sorted(self.entries):
            if key[1] == agent and (product is None or key[2] == product):
                out.append((key, self.entries[key]))
        return out

    def outflows(self, agent: AgentId, product: ProductId | None = None) -> list[tuple[FlowKey, FlowEntry]]:
        out = []
        for key in sorted(self.entries):
            if key[0] == agent and (product is None or key[2] == product):
                out.append((key, self.entries[key]))
        return out


@dataclass(frozen=True)
class Disruption:
    agent: AgentId
    lead_time_scale: float
    detection_time: float = 0.0


@dataclass(frozen=True)
class SaaConfig:
    sample_count: int = 30
    seed: int = 0


@dataclass(frozen=True)
class Network:
    agents: dict[AgentId, Agent]
    edges: frozenset[FlowKey]
    trust: dict[tuple[AgentId, AgentId], float] = field(default_factory=dict)

    def suppliers_of(self, agent: AgentId, product: ProductId) -> list[AgentId]:
        """Candidate suppliers of ``product`` for ``agent``, sorted by id."""
        return sorted({z for (z, j, k) in self.edges if j == agent and k == product})

    def trust_sigma(self, demand_agent: AgentId, supplier: AgentId) -> float:
        return self.trust.get((demand_agent, supplier), 0.0)

    def required_time(self, agent: AgentId, product: ProductId) -> float | None:
        """When ``agent`` needs ``product``: earliest consuming production
        start for producers, the delivery deadline for customers."""
        a = self.agents[agent]
        starts = [
            a.planned_start.get(made, 0.0)
            for made, inputs in sorted(a.bom.items())
            if product in inputs
        ]
        if starts:
            return min(starts)
        if product in a.deadlines:
            return a.deadlines[product]
        return None


@dataclass(frozen=True)
class Scenario:
    network: Network
    initial_plan: FlowPlan
    disruption: Disruption
    saa: SaaConfig


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def _require_keys(obj: Mapping[str, Any], allowed: Iterable[str], required: Iterable[str], where: str) -> None:
    allowed = set(allowed)
    for key in obj:
        if key not in allowed:
            raise ScenarioParseError(f"{where}: unknown key {key!r}")
    for key in required:
        if key not in obj:
            raise ScenarioParseError(f"{where}: missing key {key!r}")


def _number(value: Any, where: str, minimum: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(f"{where}: expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ScenarioParseError(f"{where}: value must be finite")
    if minimum is not None and out < minimum:
        raise ScenarioValidationError(f"{where}: value {out:g} below minimum {minimum:g}")
    return out


def _gaussian(value: Any, where: str) -> Gaussian:
    if not isinstance(value, Mapping):
        raise ScenarioParseError(f"{where}: expected {{'mean', 'std'}}")
    _require_keys(value, ("mean", "std"), ("mean",), where)
    mean = _number(value["mean"], f"{where}.mean", minimum=0.0)
    std = _number(value.get("std", 0.0), f"{where}.std", minimum=0.0)
    return Gaussian(mean=mean, std=std)


def _parse_weights(raw: Mapping[str, Any], defaults: RiskWeights, where: str) -> RiskWeights:
    _require_keys(raw, ("supplier_reward", "supplier_risk", "lateness", "unmet"), (), where)
    return RiskWeights(
        supplier_reward=_number(raw.get("supplier_reward", defaults.supplier_reward), f"{where}.supplier_reward", 0.0),
        supplier_risk=_number(raw.get("supplier_risk", defaults.supplier_risk), f"{where}.supplier_risk", 0.0),
        lateness=_number(raw.get("lateness", defaults.lateness), f"{where}.lateness", 0.0),
        unmet=_number(raw.get("unmet", defaults.unmet), f"{where}.unmet", 0.0),
    )


def _parse_agent(raw: Mapping[str, Any], weight_defaults: RiskWeights) -> Agent:
    if not isinstance(raw, Mapping):
        raise ScenarioParseError("agents: each entry must be an object")
    agent_id = raw.get("id")
    if not isinstance(agent_id, str) or not agent_id:
        raise ScenarioParseError("agents: every agent needs a non-empty string 'id'")
    where = f"agent {agent_id!r}"
    _require_keys(
        raw,
        ("id", "kind", "produces", "bom", "planned_start", "deadlines",
         "stochastic", "risk_attitude", "weights", "rewards"),
        ("id", "kind"),
        where,
    )
    kind = raw["kind"]
    if kind not in AGENT_KINDS:
        raise ScenarioValidationError(f"{where}: unknown kind {kind!r}")

    produces: dict[ProductId, ProduceSpec] = {}
    for item in raw.get("produces", []):
        _require_keys(item, ("product", "capacity", "unit_income", "unit_cost"), ("product",), f"{where}.produces")
        product = item["product"]
        if not isinstance(product, str) or not product:
            raise ScenarioParseError(f"{where}.produces: product must be a non-empty string")
        if product in produces:
            raise ScenarioValidationError(f"{where}: duplicate produces entry for {product!r}")
        produces[product] = ProduceSpec(
            capacity=_number(item.get("capacity", 0.0), f"{where}.produces[{product}].capacity", 0.0),
            unit_income=_number(item.get("unit_income", 0.0), f"{where}.produces[{product}].unit_income", 0.0),
            unit_cost=_number(item.get("unit_cost", 0.0), f"{where}.produces[{product}].unit_cost", 0.0),
        )

    bom: dict[ProductId, dict[ProductId, float]] = {}
    for made, inputs in raw.get("bom", {}).items():
        if made not in produces:
            raise ScenarioValidationError(f"{where}: bom lists {made!r} which the agent does not produce")
        if not isinstance(inputs, Mapping):
            raise ScenarioParseError(f"{where}.bom[{made}] must map input product -> ratio")
        bom[made] = {}
        for input_product, ratio in inputs.items():
            bom[made][input_product] = _number(ratio, f"{where}.bom[{made}][{input_product}]", 0.0)
            if bom[made][input_product] == 0.0:
                raise ScenarioValidationError(f"{where}: bom ratio for {made!r} <- {input_product!r} must be positive")

    planned_start: dict[ProductId, float] = {}
    for product, t in raw.get("planned_start", {}).items():
        if product not in produces:
            raise ScenarioValidationError(f"{where}: planned_start for {product!r} which the agent does not produce")
        planned_start[product] = _number(t, f"{where}.planned_start[{product}]", 0.0)

    deadlines: dict[ProductId, float] = {}
    for product, t in raw.get("deadlines", {}).items():
        deadlines[product] = _number(t, f"{where}.deadlines[{product}]", 0.0)
    if deadlines and kind != "customer":
        raise ScenarioValidationError(f"{where}: deadlines are only valid on customers")

    stochastic = raw.get("stochastic", {})
    _require_keys(stochastic, ("production", "lead_time", "start_time", "over_delay_factor"), (), f"{where}.stochastic")
    production = {
        product: _gaussian(g, f"{where}.stochastic.production[{product}]")
        for product, g in stochastic.get("production", {}).items()
    }
    for product in production:
        if product not in produces:
            raise ScenarioValidationError(f"{where}: stochastic production for {product!r} which the agent does not produce")
    lead_time: dict[tuple[AgentId, ProductId], Gaussian] = {}
    for receiver, per_product in stochastic.get("lead_time", {}).items():
        for product, g in per_product.items():
            lead_time[(receiver, product)] = _gaussian(g, f"{where}.stochastic.lead_time[{receiver}][{product}]")
    start_time = {
        product: _gaussian(g, f"{where}.stochastic.start_time[{product}]")
        for product, g in stochastic.get("start_time", {}).items()
    }
    for product in start_time:
        if product not in produces:
            raise ScenarioValidationError(f"{where}: stochastic start_time for {product!r} which the agent does not produce")
    over_delay: dict[tuple[AgentId, ProductId], float] = {}
    for receiver, per_product in stochastic.get("over_delay_factor", {}).items():
        for product, factor in per_product.items():
            over_delay[(receiver, product)] = _number(factor, f"{where}.stochastic.over_delay_factor[{receiver}][{product}]", 1.0)

    attitude = raw.get("risk_attitude", "neutral")
    if attitude not in RISK_ATTITUDES:
        raise ScenarioValidationError(f"{where}: risk_attitude must be one of {sorted(RISK_ATTITUDES)}")

    weights = _parse_weights(raw.get("weights", {}), weight_defaults, f"{where}.weights")

    rewards_raw = raw.get("rewards", {})
    _require_keys(rewards_raw, ("demand_fill", "on_time"), (), f"{where}.rewards")
    rewards = Rewards(
        demand_fill=_number(rewards_raw.get("demand_fill", 1.0), f"{where}.rewards.demand_fill", 0.0),
        on_time=_number(rewards_raw.get("on_time", 1.0), f"{where}.rewards.on_time", 0.0),
    )

    return Agent(
        id=agent_id,
        kind=kind,
        produces=produces,
        bom=bom,
        planned_start=planned_start,
        deadlines=deadlines,
        profile=StochasticProfile(
            production=production,
            lead_time=lead_time,
            start_time=start_time,
            over_delay_factor=over_delay,
        ),
        risk_attitude=attitude,
        weights=weights,
        rewards=rewards,
    )


def parse_scenario(raw: Mapping[str, Any]) -> Scenario:
    """Build and validate a Scenario from an already-decoded JSON object."""
    if not isinstance(raw, Mapping):
        raise ScenarioParseError("scenario root must be a JSON object")
    _require_keys(
        raw,
        ("agents", "edges", "trust", "initial_plan", "disruption", "saa", "weights_defaults"),
        ("agents", "edges", "initial_plan", "disruption", "saa"),
        "scenario",
    )

    weight_defaults = _parse_weights(raw.get("weights_defaults", {}), RiskWeights(), "weights_defaults")

    agents: dict[AgentId, Agent] = {}
    for item in raw["agents"]:
        agent = _parse_agent(item, weight_defaults)
        if agent.id in agents:
            raise ScenarioValidationError(f"duplicate agent id {agent.id!r}")
        agents[agent.id] = agent

    edges: set[FlowKey] = set()
    for item in raw["edges"]:
        _require_keys(item, ("from", "to", "product"), ("from", "to", "product"), "edges")
        key = (item["from"], item["to"], item["product"])
        z, j, k = key
        if z not in agents:
            raise ScenarioValidationError(f"edge {key}: unknown supplier {z!r}")
        if j not in agents:
            raise ScenarioValidationError(f"edge {key}: unknown receiver {j!r}")
        if z == j:
            raise ScenarioValidationError(f"edge {key}: an agent cannot supply itself")
        if k not in agents[z].produces:
            raise ScenarioValidationError(f"edge {key}: supplier {z!r} does not produce {k!r}")
        if key in edges:
            raise ScenarioValidationError(f"duplicate edge {key}")
        edges.add(key)

    trust: dict[tuple[AgentId, AgentId], float] = {}
    for demand_agent, per_supplier in raw.get("trust", {}).items():
        if demand_agent not in agents:
            raise ScenarioValidationError(f"trust: unknown agent {demand_agent!r}")
        for supplier, sigma in per_supplier.items():
            if supplier not in agents:
                raise ScenarioValidationError(f"trust[{demand_agent}]: unknown supplier {supplier!r}")
            trust[(demand_agent, supplier)] = _number(sigma, f"trust[{demand_agent}][{supplier}]", 0.0)

    # every edge must come with a lead-time estimate for planning and simulation
    for z, j, k in sorted(edges):
        if (j, k) not in agents[z].profile.lead_time:
            raise ScenarioValidationError(
                f"agent {z!r}: stochastic.lead_time missing for edge to {j!r} product {k!r}"
            )

    entries: dict[FlowKey, FlowEntry] = {}
    for item in raw["initial_plan"]:
        _require_keys(item, ("from", "to", "product", "quantity", "arrival"), ("from", "to", "product", "quantity", "arrival"), "initial_plan")
        key = (item["from"], item["to"], item["product"])
        if key not in edges:
            raise ScenarioValidationError(f"initial_plan {key}: no such edge in the network")
        if key in entries:
            raise ScenarioValidationError(f"initial_plan: duplicate flow {key}")
        entries[key] = FlowEntry(
            quantity=_number(item["quantity"], f"initial_plan {key}.quantity", 0.0),
            arrival=_number(item["arrival"], f"initial_plan {key}.arrival", 0.0),
        )

    disruption_raw = raw["disruption"]
    _require_keys(disruption_raw, ("agent", "lead_time_scale", "detection_time"), ("agent", "lead_time_scale"), "disruption")
    if disruption_raw["agent"] not in agents:
        raise ScenarioValidationError(f"disruption: unknown agent {disruption_raw['agent']!r}")
    disruption = Disruption(
        agent=disruption_raw["agent"],
        lead_time_scale=_number(disruption_raw["lead_time_scale"], "disruption.lead_time_scale", 0.0),
        detection_time=_number(disruption_raw.get("detection_time", 0.0), "disruption.detection_time", 0.0),
    )

    saa_raw = raw["saa"]
    _require_keys(saa_raw, ("sample_count", "seed"), (), "saa")
    sample_count = saa_raw.get("sample_count", 30)
    if isinstance(sample_count, bool) or not isinstance(sample_count, int) or sample_count < 1:
        raise ScenarioValidationError("saa.sample_count must be an integer >= 1")
    seed = saa_raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ScenarioValidationError("saa.seed must be an integer in [0, 2**64)")
    saa = SaaConfig(sample_count=sample_count, seed=seed)

    network = Network(agents=agents, edges=frozenset(edges), trust=trust)
    topological_order(network)  # raises on cycles
    return Scenario(
        network=network,
        initial_plan=FlowPlan(entries=entries),
        disruption=disruption,
        saa=saa,
    )


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return parse_scenario(raw)


def topological_order(network: Network) -> list[AgentId]:
    """Agents ordered suppliers-first; ties broken lexicographically."""
    succ: dict[AgentId, set[AgentId]] = {a: set() for a in network.agents}
    indegree: dict[AgentId, int] = {a: 0 for a in network.agents}
    seen: set[tuple[AgentId, AgentId]] = set()
    for z, j, _ in network.edges:
        if (z, j) not in seen:
            seen.add((z, j))
            succ[z].add(j)
            indegree[j] += 1
    ready = sorted(a for a, d in indegree.items() if d == 0)
    order: list[AgentId] = []
    while ready:
        agent = ready.pop(0)
        order.append(agent)
        inserted = False
        for nxt in sorted(succ[agent]):
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
                inserted = True
        if inserted:
            ready.sort()
    if len(order) != len(network.agents):
        stuck = sorted(a for a, d in indegree.items() if d > 0)
        raise ScenarioValidationError(f"supply relations contain a cycle through {stuck}")
    return order


# ---------------------------------------------------------------------------
# canonical serialization
# ---------------------------------------------------------------------------


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    """Canonical plain-dict form of a scenario (agents and keys sorted)."""
    net = scenario.network
    agents_out = []
    for agent_id in sorted(net.agents):
        a = net.agents[agent_id]
        lead: dict[str, dict[str, Any]] = {}
        for (receiver, product) in sorted(a.profile.lead_time):
            g = a.profile.lead_time[(receiver, product)]
            lead.setdefault(receiver, {})[product] = {"mean": g.mean, "std": g.std}
        over: dict[str, dict[str, float]] = {}
        for (receiver, product) in sorted(a.profile.over_delay_factor):
            over.setdefault(receiver, {})[product] = a.profile.over_delay_factor[(receiver, product)]
        agents_out.append(
            {
                "id": a.id,
                "kind": a.kind,
                "produces": [
                    {
                        "product": p,
                        "capacity": spec.capacity,
                        "unit_income": spec.unit_income,
                        "unit_cost": spec.unit_cost,
                    }
                    for p, spec in sorted(a.produces.items())
                ],
                "bom": {made: dict(sorted(inputs.items())) for made, inputs in sorted(a.bom.items())},
                "planned_start": dict(sorted(a.planned_start.items())),
                "deadlines": dict(sorted(a.deadlines.items())),
                "stochastic": {
                    "production": {
                        p: {"mean": g.mean, "std": g.std} for p, g in sorted(a.profile.production.items())
                    },
                    "lead_time": lead,
                    "start_time": {
                        p: {"mean": g.mean, "std": g.std} for p, g in sorted(a.profile.start_time.items())
                    },
                    "over_delay_factor": over,
                },
                "risk_attitude": a.risk_attitude,
                "weights": {
                    "supplier_reward": a.weights.supplier_reward,
                    "supplier_risk": a.weights.supplier_risk,
                    "lateness": a.weights.lateness,
                    "unmet": a.weights.unmet,
                },
                "rewards": {"demand_fill": a.rewards.demand_fill, "on_time": a.rewards.on_time},
            }
        )
    trust_out: dict[str, dict[str, float]] = {}
    for (demand_agent, supplier) in sorted(net.trust):
        trust_out.setdefault(demand_agent, {})[supplier] = net.trust[(demand_agent, supplier)]
    return {
        "agents": agents_out,
        "edges": [
            {"from": z, "to": j, "product": k} for z, j, k in sorted(net.edges)
        ],
        "trust": trust_out,
        "initial_plan": plan_to_list(scenario.initial_plan),
        "disruption": {
            "agent": scenario.disruption.agent,
            "lead_time_scale": scenario.disruption.lead_time_scale,
            "detection_time": scenario.disruption.detection_time,
        },
        "saa": {"sample_count": scenario.saa.sample_count, "seed": scenario.saa.seed},
    }


def normalize_scenario(raw: Mapping[str, Any]) -> dict[str, Any]:
    """Parse and re-emit a raw scenario dict in canonical form."""
    return scenario_to_dict(parse_scenario(raw))


def plan_to_list(plan: FlowPlan) -> list[dict[str, Any]]:
    out = []
    for key in sorted(plan.entries):
        z, j, k = key
        entry = plan.entries[key]
        item: dict[str, Any] = {
            "from": z,
            "to": j,
            "product": k,
            "quantity": entry.quantity,
            "arrival": entry.arrival,
        }
        if entry.over_quantity > 0.0:
            item["over_quantity"] = entry.over_quantity
            item["over_arrival"] = entry.over_arrival
        out.append(item)
    return out


def dumps_plan(plan: FlowPlan) -> str:
    """Deterministic byte-stable JSON text for a plan."""
    return json.dumps({"flows": plan_to_list(plan)}, indent=2, sort_keys=True) + "\n"
