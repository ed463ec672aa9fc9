"""Seeded randomness: labeled streams, truncated draws, sampled realizations.

All randomness in the package flows through :func:`stream`, which derives an
independent generator from the master seed plus a label path (purpose,
round, agent id, ...). Given the same seed and labels the draw sequence is
identical across runs and platforms, and consumers in unrelated label paths
never share a stream.

Every draw helper consumes exactly one normal variate even when the spread
is zero, so switching a single spread parameter does not shift any other
consumer's stream.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace

import numpy as np

from .messages import ResponseLine, SupplierResponse
from .model import Agent, AgentId, Disruption, Gaussian, Network, ProductId, SaaConfig

Label = str | int


def _label_entropy(label: Label) -> int:
    if isinstance(label, bool):
        raise TypeError("stream labels must be strings or non-negative integers")
    if isinstance(label, int):
        if label < 0:
            raise ValueError(f"stream label {label} must be non-negative")
        return label
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    raise TypeError(f"stream labels must be strings or non-negative integers, got {type(label).__name__}")


def stream(seed: int, *labels: Label) -> np.random.Generator:
    """Independent generator for the given master seed and label path."""
    entropy = [seed & 0xFFFFFFFFFFFFFFFF] + [_label_entropy(label) for label in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def sample_gaussian_trunc(mean: float, stddev: float, rng: np.random.Generator) -> float:
    """One normal draw clamped to be nonnegative.

    A zero spread returns the mean exactly but still consumes one variate,
    keeping downstream draws aligned across parameter changes.
    """
    if stddev < 0.0:
        raise ValueError("stddev must be >= 0")
    z = rng.standard_normal()
    return max(0.0, mean + stddev * z)


def _draw(rng: np.random.Generator, g: Gaussian) -> float:
    return sample_gaussian_trunc(g.mean, g.std, rng)


@dataclass(frozen=True)
class AgentRealization:
    """One sampled future for a single agent."""

    production: dict[ProductId, float]
    lead_time: dict[tuple[AgentId, ProductId], float]
    start_time: dict[ProductId, float]


@dataclass(frozen=True)
class SaaRealization:
    """One sampled future of the whole network.

    Keys carry the owning agent: ``production[(z, k)]`` units producible,
    ``lead_time[(z, j, k)]`` shipping time on that edge, ``start_time[(z,
    k)]`` earliest production start.
    """

    production: dict[tuple[AgentId, ProductId], float]
    lead_time: dict[tuple[AgentId, AgentId, ProductId], float]
    start_time: dict[tuple[AgentId, ProductId], float]


def sample_agent_realizations(
    agent: Agent,
    count: int,
    rng: np.random.Generator,
    lead_scale: float = 0.0,
) -> list[AgentRealization]:
    """Draw ``count`` realizations of one agent's uncertain quantities.

    ``lead_scale`` stretches every lead-time mean by ``1 + lead_scale``
    before sampling (spreads untouched); pass the disruption scale for the
    disrupted agent, 0 otherwise. Iteration is over sorted keys so the draw
    order is reproducible.
    """
    if count < 1:
        raise ValueError("sample count must be >= 1")
    production_keys = sorted(agent.profile.production)
    lead_keys = sorted(agent.profile.lead_time)
    start_keys = sorted(agent.profile.start_time)
    factor = 1.0 + lead_scale
    out: list[AgentRealization] = []
    for _ in range(count):
        production = {k: _draw(rng, agent.profile.production[k]) for k in production_keys}
        lead_time = {}
        for key in lead_keys:
            g = agent.profile.lead_time[key]
            lead_time[key] = sample_gaussian_trunc(g.mean * factor, g.std, rng)
        start_time = {k: _draw(rng, agent.profile.start_time[k]) for k in start_keys}
        out.append(AgentRealization(production=production, lead_time=lead_time, start_time=start_time))
    return out


def make_realizations(
    network: Network,
    cfg: SaaConfig,
    disruption: Disruption,
    *labels: Label,
) -> list[SaaRealization]:
    """Draw ``cfg.sample_count`` network-wide realizations.

    Each agent draws from its own derived stream, so one agent's sample
    usage never shifts another's. The disrupted agent's lead-time means are
    pre-scaled by ``1 + lead_time_scale``. Extra ``labels`` (e.g. a round
    number) select an independent batch for the same seed.
    """
    per_agent: dict[AgentId, list[AgentRealization]] = {}
    for agent_id in sorted(network.agents):
        rng = stream(cfg.seed, "response-saa", *labels, agent_id)
        scale = disruption.lead_time_scale if agent_id == disruption.agent else 0.0
        per_agent[agent_id] = sample_agent_realizations(
            network.agents[agent_id], cfg.sample_count, rng, lead_scale=scale
        )
    out: list[SaaRealization] = []
    for i in range(cfg.sample_count):
        production: dict[tuple[AgentId, ProductId], float] = {}
        lead_time: dict[tuple[AgentId, AgentId, ProductId], float] = {}
        start_time: dict[tuple[AgentId, ProductId], float] = {}
        for agent_id, reals in per_agent.items():
            r = reals[i]
            for product, value in r.production.items():
                production[(agent_id, product)] = value
            for (receiver, product), value in r.lead_time.items():
                lead_time[(agent_id, receiver, product)] = value
            for product, value in r.start_time.items():
                start_time[(agent_id, product)] = value
        out.append(SaaRealization(production=production, lead_time=lead_time, start_time=start_time))
    return out


def perturb_quantity(rng: np.random.Generator, value: float, sigma: float) -> float:
    """Distrust-adjusted value: one draw with spread ``sigma * value``.

    ``sigma == 0`` (full trust) reproduces ``value`` exactly; the draw is
    consumed either way.
    """
    return sample_gaussian_trunc(value, sigma * value, rng)


def perturb_response(resp: SupplierResponse, sigma: float, rng: np.random.Generator) -> SupplierResponse:
    """A demand agent's distrusting view of a supplier response.

    Every quantity and arrival is redrawn around the stated value with
    spread proportional to ``sigma``; ``sigma == 0`` returns an identical
    response. Lines are processed in order, four draws each.
    """
    if sigma < 0.0:
        raise ValueError("trust sigma must be >= 0")
    lines = tuple(
        ResponseLine(
            demand_agent=line.demand_agent,
            product=line.product,
            within_quantity=perturb_quantity(rng, line.within_quantity, sigma),
            over_quantity=perturb_quantity(rng, line.over_quantity, sigma),
            within_arrival=perturb_quantity(rng, line.within_arrival, sigma),
            over_arrival=perturb_quantity(rng, line.over_arrival, sigma),
        )
        for line in resp.lines
    )
    return replace(resp, lines=lines)
