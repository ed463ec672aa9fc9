"""Agent decision problems: supplier response and supplier selection.

Both problems are built as small mixed-binary linear models and solved
exactly by :mod:`scnreplan.solver`.

Supplier response (one model per sampled realization): choose how much of
each requested flow to commit within and above nominal capacity, trading
unit income and fulfillment rewards against the risk penalty on
above-capacity commitments. A risk-neutral supplier averages the optimal
decisions across realizations; a risk-averse one keeps the decisions of the
worst (lowest-objective) realization.

Supplier selection (one model per demand agent, all samples jointly): order
quantities from the responding suppliers, minimizing purchase cost plus
penalty-weighted expected shortfall and lateness, where each sample sees the
responses perturbed by the agent's trust in each supplier. A risk-neutral
agent minimizes the sample mean; a risk-averse one the worst sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .messages import DemandRequest, ResponseLine, SelectionDecision, SelectionLine, SupplierResponse
from .model import AgentId, Network, ProductId
from .sampling import SaaRealization, perturb_response
from .solver import Bonus, LinearRow, MilpModel, milp_solve_exact

_EPS = 1e-9

DumpHook = Callable[[MilpModel], None]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


def _response_pairs(requests: Sequence[DemandRequest]) -> list[DemandRequest]:
    ordered = sorted(requests, key=lambda r: (r.demand_agent, r.product))
    for a, b in zip(ordered, ordered[1:]):
        if (a.demand_agent, a.product) == (b.demand_agent, b.product):
            raise ValueError(f"duplicate request for {a.demand_agent!r}/{a.product!r}")
    return ordered


@dataclass(frozen=True)
class ResponseSample:
    """Optimal response decisions under one sampled realization."""

    lines: tuple[ResponseLine, ...]
    objective: float


def build_response_model(
    network: Network,
    supplier: AgentId,
    requests: Sequence[DemandRequest],
    realization: SaaRealization,
    name: str = "",
) -> tuple[MilpModel, list[DemandRequest]]:
    """Single-realization response model for one supplier.

    Variable layout: pair q gets continuous within/over quantities at
    ``2q``/``2q+1`` and binaries (respond-within, respond-over,
    demand-met, on-time) at ``4q .. 4q+3``. Arrival times are not model
    variables: the within arrival is ``(lead + start) * respond-within``, a
    constant once the binary is fixed, and the over arrival is the delay
    factor times that.
    """
    agent = network.agents[supplier]
    pairs = _response_pairs(requests)
    _require(bool(pairs), f"supplier {supplier!r}: no requests to respond to")

    demand_total = 0.0
    max_deadline = 0.0
    taus: list[float] = []
    betas: list[float] = []
    incomes: list[float] = []
    for req in pairs:
        j, k = req.demand_agent, req.product
        _require(j in network.agents, f"supplier {supplier!r}: unknown demand agent {j!r}")
        _require(k in agent.produces, f"supplier {supplier!r} does not produce requested product {k!r}")
        _require(
            (supplier, j, k) in realization.lead_time,
            f"realization has no lead time for edge ({supplier!r}, {j!r}, {k!r})",
        )
        tau = realization.lead_time[(supplier, j, k)] + realization.start_time.get((supplier, k), 0.0)
        taus.append(tau)
        betas.append(agent.profile.over_delay_factor.get((j, k), 1.0))
        incomes.append(agent.produces[k].unit_income)
        demand_total += req.quantity
        max_deadline = max(max_deadline, req.deadline)

    big_m = max(demand_total, max_deadline + max(b * t for b, t in zip(betas, taus)), 1.0)

    n_pairs = len(pairs)
    lb = (0.0,) * (2 * n_pairs)
    ub = tuple(v for req in pairs for v in (req.quantity, req.quantity))
    rows: list[LinearRow] = []
    objective: list[tuple[int, float]] = []
    risk_weight = agent.weights.supplier_risk

    for q, req in enumerate(pairs):
        yu, yo = 2 * q, 2 * q + 1
        g_u, g_o, e_p, e_t = 4 * q, 4 * q + 1, 4 * q + 2, 4 * q + 3
        # quantities only flow on declared responses
        rows.append(LinearRow(cont=((yu, 1.0),), bins=((g_u, -big_m),), sense="<=", rhs=0.0))
        rows.append(LinearRow(cont=((yo, 1.0),), bins=((g_o, -big_m),), sense="<=", rhs=0.0))
        # an over-capacity quote rides the nominal response's arrival time
        rows.append(LinearRow(cont=(), bins=((g_o, 1.0), (g_u, -1.0)), sense="<=", rhs=0.0))
        # never offer more than asked
        rows.append(LinearRow(cont=((yu, 1.0), (yo, 1.0)), bins=(), sense="<=", rhs=req.quantity))
        # demand-met flag forces the full amount
        rows.append(
            LinearRow(cont=((yu, 1.0), (yo, 1.0)), bins=(), sense="==", rhs=req.quantity, active_if=(e_p, 1))
        )
        # on-time flag only if the effective arrival makes the deadline
        tau, beta = taus[q], betas[q]
        rows.append(
            LinearRow(
                cont=(),
                bins=((g_u, tau), (g_o, tau * (beta - 1.0)), (e_t, big_m)),
                sense="<=",
                rhs=req.deadline + big_m,
            )
        )
        objective.append((yu, incomes[q]))
        objective.append((yo, incomes[q] - risk_weight))

    for product in sorted({req.product for req in pairs}):
        members = [q for q, req in enumerate(pairs) if req.product == product]
        produced = realization.production.get((supplier, product), agent.produces[product].capacity)
        # sampled production caps the total commitment
        rows.append(
            LinearRow(
                cont=tuple((v, 1.0) for q in members for v in (2 * q, 2 * q + 1)),
                bins=(),
                sense="<=",
                rhs=produced,
            )
        )
        # nominal capacity caps the within-capacity slice
        rows.append(
            LinearRow(
                cont=tuple((2 * q, 1.0) for q in members),
                bins=(),
                sense="<=",
                rhs=agent.produces[product].capacity,
            )
        )

    bonuses: list[Bonus] = []
    reward_weight = agent.weights.supplier_reward
    for j in sorted({req.demand_agent for req in pairs}):
        members = [q for q, req in enumerate(pairs) if req.demand_agent == j]
        rewards = network.agents[j].rewards
        bonuses.append(Bonus(requires=tuple(4 * q + 2 for q in members), value=reward_weight * rewards.demand_fill))
        bonuses.append(Bonus(requires=tuple(4 * q + 3 for q in members), value=reward_weight * rewards.on_time))

    model = MilpModel(
        n_vars=2 * n_pairs,
        n_bins=4 * n_pairs,
        lb=lb,
        ub=ub,
        objective=tuple(objective),
        bonuses=tuple(bonuses),
        rows=tuple(rows),
        maximize=True,
        name=name or f"response:{supplier}",
    )
    return model, pairs


def solve_response_sample(
    network: Network,
    supplier: AgentId,
    requests: Sequence[DemandRequest],
    realization: SaaRealization,
    dump: DumpHook | None = None,
) -> ResponseSample:
    """Exact optimum of the one-realization response model."""
    model, pairs = build_response_model(network, supplier, requests, realization)
    if dump is not None:
        dump(model)
    solution = milp_solve_exact(model)
    agent = network.agents[supplier]
    lines = []
    for q, req in enumerate(pairs):
        within = float(min(max(solution.x[2 * q], 0.0), req.quantity))
        over = float(min(max(solution.x[2 * q + 1], 0.0), req.quantity))
        respond_within = solution.binaries[4 * q]
        tau = realization.lead_time[(supplier, req.demand_agent, req.product)] + realization.start_time.get(
            (supplier, req.product), 0.0
        )
        beta = agent.profile.over_delay_factor.get((req.demand_agent, req.product), 1.0)
        within_arrival = tau * respond_within
        lines.append(
            ResponseLine(
                demand_agent=req.demand_agent,
                product=req.product,
                within_quantity=within,
                over_quantity=over,
                within_arrival=within_arrival,
                over_arrival=beta * within_arrival,
            )
        )
    return ResponseSample(lines=tuple(lines), objective=solution.objective)


def aggregate_saa(supplier: AgentId, samples: Sequence[ResponseSample], attitude: str) -> SupplierResponse:
    """Combine per-sample optima into the final response.

    Neutral: component-wise mean of quantities and arrivals, mean objective.
    Averse: the decisions of the worst (lowest-objective) sample, earliest
    sample on ties.
    """
    if not samples:
        raise ValueError("aggregate_saa needs at least one solved sample")
    if attitude not in ("neutral", "averse"):
        raise ValueError(f"unknown risk attitude {attitude!r}")
    if attitude == "averse":
        worst = min(range(len(samples)), key=lambda i: (samples[i].objective, i))
        chosen = samples[worst]
        return SupplierResponse(supplier=supplier, lines=chosen.lines, objective=chosen.objective)
    count = len(samples)
    first = samples[0].lines
    lines = []
    for idx, line in enumerate(first):
        lines.append(
            ResponseLine(
                demand_agent=line.demand_agent,
                product=line.product,
                within_quantity=sum(s.lines[idx].within_quantity for s in samples) / count,
                over_quantity=sum(s.lines[idx].over_quantity for s in samples) / count,
                within_arrival=sum(s.lines[idx].within_arrival for s in samples) / count,
                over_arrival=sum(s.lines[idx].over_arrival for s in samples) / count,
            )
        )
    objective = sum(s.objective for s in samples) / count
    return SupplierResponse(supplier=supplier, lines=tuple(lines), objective=objective)


def solve_supplier_response(
    network: Network,
    supplier: AgentId,
    requests: Sequence[DemandRequest],
    realizations: Sequence[SaaRealization],
    attitude: str,
    dump: DumpHook | None = None,
) -> SupplierResponse:
    """Solve every realization and aggregate according to the attitude."""
    if not requests:
        return SupplierResponse(supplier=supplier, lines=(), objective=0.0)
    samples = [solve_response_sample(network, supplier, requests, xi, dump=dump) for xi in realizations]
    return aggregate_saa(supplier, samples, attitude)


# ---------------------------------------------------------------------------
# supplier selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Candidate:
    supplier: AgentId
    product: ProductId
    price: float
    within_quantity: float
    over_quantity: float
    within_arrival: float
    over_arrival: float

    @property
    def total(self) -> float:
        return self.within_quantity + self.over_quantity


def _selection_candidates(
    network: Network,
    demand_agent: AgentId,
    responses: Sequence[SupplierResponse],
) -> list[_Candidate]:
    out = []
    for resp in sorted(responses, key=lambda r: r.supplier):
        for line in resp.lines:
            if line.demand_agent != demand_agent:
                continue
            if line.within_quantity + line.over_quantity <= _EPS:
                continue
            out.append(
                _Candidate(
                    supplier=resp.supplier,
                    product=line.product,
                    price=network.agents[resp.supplier].produces[line.product].unit_income,
                    within_quantity=line.within_quantity,
                    over_quantity=line.over_quantity,
                    within_arrival=line.within_arrival,
                    over_arrival=line.over_arrival,
                )
            )
    out.sort(key=lambda c: (c.supplier, c.product))
    return out


def _perturbed_views(
    network: Network,
    demand_agent: AgentId,
    candidates: Sequence[_Candidate],
    sample_count: int,
    rng: np.random.Generator,
) -> list[list[_Candidate]]:
    """Per-sample distrusted copies of the candidate lines.

    Draw order: samples outer, suppliers sorted, lines in candidate order;
    four draws per line via perturb_response.
    """
    suppliers = sorted({c.supplier for c in candidates})
    by_supplier = {
        z: [c for c in candidates if c.supplier == z]
        for z in suppliers
    }
    views: list[list[_Candidate]] = []
    for _ in range(sample_count):
        view: dict[tuple[AgentId, ProductId], _Candidate] = {}
        for z in suppliers:
            cands = by_supplier[z]
            resp = SupplierResponse(
                supplier=z,
                lines=tuple(
                    ResponseLine(
                        demand_agent=demand_agent,
                        product=c.product,
                        within_quantity=c.within_quantity,
                        over_quantity=c.over_quantity,
                        within_arrival=c.within_arrival,
                        over_arrival=c.over_arrival,
                    )
                    for c in cands
                ),
            )
            pert = perturb_response(resp, network.trust_sigma(demand_agent, z), rng)
            for c, line in zip(cands, pert.lines):
                view[(c.supplier, c.product)] = _Candidate(
                    supplier=c.supplier,
                    product=c.product,
                    price=c.price,
                    within_quantity=line.within_quantity,
                    over_quantity=line.over_quantity,
                    within_arrival=line.within_arrival,
                    over_arrival=line.over_arrival,
                )
        views.append([view[(c.supplier, c.product)] for c in candidates])
    return views


def build_selection_model(
    network: Network,
    demand_agent: AgentId,
    requests: Sequence[DemandRequest],
    candidates: Sequence[_Candidate],
    views: Sequence[Sequence[_Candidate]],
    attitude: str,
    name: str = "",
) -> MilpModel:
    """Selection model over all samples with shared order quantities.

    Layout: order quantity for candidate p at index ``p``; where a sample's
    perturbed availability undercuts the nominal offer, a delivered variable
    (capped by that availability) is added; per (product, sample) a
    shortfall variable closes the demand balance; a risk-averse model
    appends one worst-case epigraph variable. Binaries ``2p``/``2p+1`` flag
    selecting candidate p and exceeding its within-capacity offer.
    """
    agent = network.agents[demand_agent]
    n_pairs = len(candidates)
    sample_count = len(views)
    products = sorted({req.product for req in requests})
    demand = {req.product: req.quantity for req in requests}
    deadline = {req.product: req.deadline for req in requests}
    averse = attitude == "averse"

    lb: list[float] = [0.0] * n_pairs
    ub: list[float] = [c.total for c in candidates]

    # delivered variables only where the perturbed availability binds
    delivered_idx: dict[tuple[int, int], int] = {}
    for i, view in enumerate(views):
        for p, cand in enumerate(view):
            avail = cand.within_quantity + cand.over_quantity
            if avail < candidates[p].total - _EPS:
                delivered_idx[(i, p)] = len(lb)
                lb.append(0.0)
                ub.append(max(avail, 0.0))

    short_idx: dict[tuple[int, ProductId], int] = {}
    for i in range(sample_count):
        for k in products:
            short_idx[(i, k)] = len(lb)
            lb.append(0.0)
            ub.append(demand[k])

    theta = -1
    if averse:
        theta = len(lb)
        lb.append(0.0)
        ub.append(float("inf"))

    rows: list[LinearRow] = []
    big_m = max(1.0, max((c.total for c in candidates), default=1.0))
    for p, cand in enumerate(candidates):
        sel, over = 2 * p, 2 * p + 1
        # nothing ordered from an unselected supplier
        rows.append(LinearRow(cont=((p, 1.0),), bins=((sel, -cand.total),), sense="<=", rhs=0.0))
        # ordering past the within-capacity offer flags the over path
        rows.append(
            LinearRow(cont=((p, 1.0),), bins=((over, -big_m),), sense="<=", rhs=cand.within_quantity)
        )
    for k in products:
        members = tuple((p, 1.0) for p, c in enumerate(candidates) if c.product == k)
        if members:
            # order exactly what is needed, never more
            rows.append(LinearRow(cont=members, bins=(), sense="<=", rhs=demand[k]))
    for (i, p), v in sorted(delivered_idx.items()):
        rows.append(LinearRow(cont=((v, 1.0), (p, -1.0)), bins=(), sense="<=", rhs=0.0))
    for i in range(sample_count):
        view = views[i]
        for k in products:
            terms: list[tuple[int, float]] = [(short_idx[(i, k)], 1.0)]
            for p, cand in enumerate(candidates):
                if cand.product != k:
                    continue
                terms.append((delivered_idx.get((i, p), p), 1.0))
            # delivered plus shortfall covers the demand
            rows.append(LinearRow(cont=tuple(terms), bins=(), sense=">=", rhs=demand[k]))

    lateness_u = np.zeros((sample_count, n_pairs))
    lateness_o = np.zeros((sample_count, n_pairs))
    for i, view in enumerate(views):
        for p, cand in enumerate(view):
            t = deadline[cand.product]
            lateness_u[i, p] = max(cand.within_arrival - t, 0.0)
            lateness_o[i, p] = max(cand.over_arrival - t, 0.0)

    objective: list[tuple[int, float]] = [(p, c.price) for p, c in enumerate(candidates)]
    bonuses: list[Bonus] = []
    if not averse:
        for (i, k), v in short_idx.items():
            objective.append((v, agent.weights.unmet / sample_count))
        for p in range(n_pairs):
            mean_u = float(lateness_u[:, p].mean())
            mean_o = float(lateness_o[:, p].mean())
            if mean_u > 0.0:
                bonuses.append(Bonus(requires=(2 * p,), value=agent.weights.lateness * mean_u))
            if mean_o > 0.0:
                bonuses.append(Bonus(requires=(2 * p + 1,), value=agent.weights.lateness * mean_o))
    else:
        objective.append((theta, 1.0))
        for i in range(sample_count):
            terms = [(short_idx[(i, k)], agent.weights.unmet) for k in products]
            terms.append((theta, -1.0))
            bins = []
            for p in range(n_pairs):
                if lateness_u[i, p] > 0.0:
                    bins.append((2 * p, agent.weights.lateness * lateness_u[i, p]))
                if lateness_o[i, p] > 0.0:
                    bins.append((2 * p + 1, agent.weights.lateness * lateness_o[i, p]))
            # epigraph: the worst sample's penalty is paid
            rows.append(LinearRow(cont=tuple(terms), bins=tuple(bins), sense="<=", rhs=0.0))

    return MilpModel(
        n_vars=len(lb),
        n_bins=2 * n_pairs,
        lb=tuple(lb),
        ub=tuple(ub),
        objective=tuple(objective),
        bonuses=tuple(bonuses),
        rows=tuple(rows),
        maximize=False,
        name=name or f"selection:{demand_agent}",
    )


def solve_supplier_selection(
    network: Network,
    demand_agent: AgentId,
    requests: Sequence[DemandRequest],
    responses: Sequence[SupplierResponse],
    sample_count: int,
    rng: np.random.Generator,
    attitude: str,
    dump: DumpHook | None = None,
) -> SelectionDecision:
    """Pick order quantities from the responses, exactly optimal.

    The decision record carries nominal accounting: cost of the orders,
    per-product unmet demand against the request, and per-product lateness
    of the selected offers at their stated (unperturbed) arrivals.
    """
    if attitude not in ("neutral", "averse"):
        raise ValueError(f"unknown risk attitude {attitude!r}")
    if sample_count < 1:
        raise ValueError("sample count must be >= 1")
    ordered = _response_pairs(requests)
    agent = network.agents[demand_agent]
    candidates = _selection_candidates(network, demand_agent, responses)

    if not candidates:
        unmet = {req.product: req.quantity for req in ordered}
        objective = agent.weights.unmet * sum(unmet.values())
        return SelectionDecision(
            demand_agent=demand_agent,
            lines=(),
            objective=objective,
            cost=0.0,
            unmet=unmet,
            lateness={req.product: 0.0 for req in ordered},
        )
    known = {req.product for req in ordered}
    for cand in candidates:
        _require(
            cand.product in known,
            f"selection for {demand_agent!r}: response covers unrequested product {cand.product!r}",
        )

    views = _perturbed_views(network, demand_agent, candidates, sample_count, rng)
    model = build_selection_model(network, demand_agent, ordered, candidates, views, attitude)
    if dump is not None:
        dump(model)
    solution = milp_solve_exact(model)

    lines: list[SelectionLine] = []
    ordered_total: dict[ProductId, float] = {req.product: 0.0 for req in ordered}
    lateness: dict[ProductId, float] = {req.product: 0.0 for req in ordered}
    deadline = {req.product: req.deadline for req in ordered}
    cost = 0.0
    for p, cand in enumerate(candidates):
        quantity = float(min(max(solution.x[p], 0.0), cand.total))
        if quantity <= _EPS:
            continue
        over = max(quantity - cand.within_quantity, 0.0)
        lines.append(
            SelectionLine(
                supplier=cand.supplier,
                product=cand.product,
                quantity=quantity,
                over_quantity=over,
                within_arrival=cand.within_arrival,
                over_arrival=cand.over_arrival,
            )
        )
        ordered_total[cand.product] += quantity
        cost += cand.price * quantity
        lateness[cand.product] += max(cand.within_arrival - deadline[cand.product], 0.0)
        if over > _EPS:
            lateness[cand.product] += max(cand.over_arrival - deadline[cand.product], 0.0)
    unmet = {
        req.product: max(req.quantity - ordered_total[req.product], 0.0)
        for req in ordered
    }
    return SelectionDecision(
        demand_agent=demand_agent,
        lines=tuple(lines),
        objective=solution.objective,
        cost=cost,
        unmet=unmet,
        lateness=lateness,
    )
