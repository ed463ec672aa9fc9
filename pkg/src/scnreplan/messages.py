"""Messages exchanged during re-planning: requests, responses, selections.

These are plain immutable records. A request travels from a demand agent to
candidate suppliers; each supplier answers with one response covering every
(demand agent, product) pair it was asked about; the demand agent's
selection fixes the quantities it will actually order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import AgentId, ProductId


@dataclass(frozen=True)
class DemandRequest:
    """Ask for ``quantity`` of ``product`` delivered by ``deadline``."""

    demand_agent: AgentId
    product: ProductId
    quantity: float
    deadline: float

    def __post_init__(self) -> None:
        if not self.quantity > 0.0:
            raise ValueError(f"request {self.demand_agent}/{self.product}: quantity must be > 0")
        if self.deadline < 0.0:
            raise ValueError(f"request {self.demand_agent}/{self.product}: deadline must be >= 0")


@dataclass(frozen=True)
class ResponseLine:
    """A supplier's offer to one demand agent for one product.

    ``within_quantity`` is producible inside nominal capacity and arrives at
    ``within_arrival``; ``over_quantity`` is the above-capacity slice, which
    arrives later at ``over_arrival`` (delay factor times the nominal
    arrival).
    """

    demand_agent: AgentId
    product: ProductId
    within_quantity: float
    over_quantity: float
    within_arrival: float
    over_arrival: float


@dataclass(frozen=True)
class SupplierResponse:
    supplier: AgentId
    lines: tuple[ResponseLine, ...] = ()
    objective: float = 0.0

    def line_for(self, demand_agent: AgentId, product: ProductId) -> ResponseLine | None:
        for line in self.lines:
            if line.demand_agent == demand_agent and line.product == product:
                return line
        return None


@dataclass(frozen=True)
class SelectionLine:
    """One ordered flow: ``quantity`` of ``product`` from ``supplier``.

    The slice up to the supplier's within-capacity offer arrives at
    ``within_arrival``; ``over_quantity`` is the remainder riding the
    over-capacity offer.
    """

    supplier: AgentId
    product: ProductId
    quantity: float
    over_quantity: float
    within_arrival: float
    over_arrival: float


@dataclass(frozen=True)
class SelectionDecision:
    demand_agent: AgentId
    lines: tuple[SelectionLine, ...] = ()
    objective: float = 0.0
    cost: float = 0.0
    unmet: dict[ProductId, float] = field(default_factory=dict)
    lateness: dict[ProductId, float] = field(default_factory=dict)
