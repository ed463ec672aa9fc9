"""End-to-end acceptance gate.

Each test prints one PASS/FAIL line (bypassing capture) and asserts the
same condition, so a full run shows the per-criterion verdicts inline.
"""

from __future__ import annotations

import subprocess
import sys
import time

import numpy as np
import pytest

from _oracles import milp_oracle, random_response_instance, random_selection_instance
from scenarios import analog_path, chain_dict, scenario_from
from scnreplan.metrics import (
    aggregate_objectives,
    lateness_distribution,
    mean_total_lateness,
    plan_objective_pairs,
)
from scnreplan.model import Disruption, dumps_plan, load_scenario
from scnreplan.optimizer import (
    _perturbed_views,
    _selection_candidates,
    build_response_model,
    build_selection_model,
    solve_supplier_selection,
)
from scnreplan.protocol import identify_disruption, run_replanning
from scnreplan.sampling import SaaRealization, stream
from scnreplan.simulator import simulate_many
from scnreplan.solver import milp_solve_exact

SCALES = (0.2, 0.6, 1.0)
ATTITUDES = ("neutral", "averse")
ROUNDS = 300


def _report(capsys, criterion: int, description: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {description}"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line + (f" [{detail}]" if detail else "")


@pytest.fixture(scope="module")
def analog():
    """Re-planned plans, traces and simulations for the bundled scenario."""
    scenario = load_scenario(analog_path())
    net = scenario.network
    monitored = {
        (n.receiver, n.product)
        for n in identify_disruption(net, scenario.initial_plan, scenario.disruption)
    }
    t0 = time.perf_counter()
    replans, traces, sims_replanned = {}, {}, {}
    for scale in SCALES:
        disruption = Disruption(scenario.disruption.agent, scale)
        for attitude in ATTITUDES:
            overrides = {a: attitude for a in net.agents}
            plan, trace = run_replanning(
                net, scenario.initial_plan, disruption, scenario.saa, attitudes=overrides
            )
            replans[(scale, attitude)] = plan
            traces[(scale, attitude)] = trace
            sims_replanned[(scale, attitude)] = simulate_many(
                net, plan, ROUNDS, scenario.saa.seed, disruption=disruption
            )
    sims_unrepaired = {
        scale: simulate_many(
            net,
            scenario.initial_plan,
            ROUNDS,
            scenario.saa.seed,
            disruption=Disruption(scenario.disruption.agent, scale),
        )
        for scale in SCALES
    }
    elapsed = time.perf_counter() - t0
    return {
        "scenario": scenario,
        "monitored": monitored,
        "replans": replans,
        "traces": traces,
        "sims_replanned": sims_replanned,
        "sims_unrepaired": sims_unrepaired,
        "elapsed": elapsed,
    }


# frozen reference (cost, lateness, objective) rows; six disrupted plus the baseline
REFERENCE_ROWS = [
    (31_120.0, 0.0, 31_120.0),
    (28_386.0, 1.0, 128_386.0),
    (28_416.0, 1.0, 128_416.0),
    (28_386.0, 6.0, 628_386.0),
    (29_342.0, 5.0, 529_342.0),
    (28_792.0, 8.0, 828_792.0),
    (29_208.0, 3.0, 329_208.0),
]


def test_criterion_1_reference_objective_arithmetic(capsys):
    t0 = time.perf_counter()
    exact = True
    for cost, lateness, objective in REFERENCE_ROWS:
        summary = aggregate_objectives([(cost, lateness)])
        exact = exact and summary.objective == objective and summary.production_cost == cost
    elapsed = time.perf_counter() - t0
    _report(
        capsys,
        1,
        f"objective = cost + 1e5 * lateness exact on all {len(REFERENCE_ROWS)} reference rows "
        f"({elapsed:.3f}s < 1s)",
        exact and elapsed < 1.0,
    )


def _jitter(realization: SaaRealization, rng: np.random.Generator) -> SaaRealization:
    return SaaRealization(
        production={k: v * float(rng.uniform(0.3, 1.2)) for k, v in realization.production.items()},
        lead_time={k: v * float(rng.uniform(0.8, 1.5)) for k, v in realization.lead_time.items()},
        start_time={k: v * float(rng.uniform(0.5, 1.5)) for k, v in realization.start_time.items()},
    )


def test_criterion_2_solver_matches_full_enumeration(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    response_models = 0
    for i in range(200):
        rng = np.random.default_rng(41_000 + i)
        net, z, requests, realization = random_response_instance(rng)
        realizations = [realization] + [
            _jitter(realization, rng) for _ in range(int(rng.integers(0, 3)))
        ]
        for xi in realizations:
            model, _ = build_response_model(net, z, requests, xi)
            want = milp_oracle(model)
            got = milp_solve_exact(model).objective
            assert want is not None
            worst = max(worst, abs(got - want))
            response_models += 1
    for i in range(200):
        rng = np.random.default_rng(42_000 + i)
        net, d, requests, responses, q, attitude = random_selection_instance(rng)
        candidates = _selection_candidates(net, d, responses)
        if not candidates:
            decision = solve_supplier_selection(
                net, d, requests, responses, q, stream(i, "acc"), attitude
            )
            closed_form = net.agents[d].weights.unmet * sum(r.quantity for r in requests)
            worst = max(worst, abs(decision.objective - closed_form))
            continue
        views = _perturbed_views(net, d, candidates, q, stream(i, "acc"))
        model = build_selection_model(net, d, requests, candidates, views, attitude)
        want = milp_oracle(model)
        got = milp_solve_exact(model).objective
        assert want is not None
        worst = max(worst, abs(got - want))
    elapsed = time.perf_counter() - t0
    _report(
        capsys,
        2,
        f"exact solver within 1e-6 of enumeration on 200+200 instances "
        f"({response_models} response models, worst gap {worst:.2e}, {elapsed:.1f}s < 60s)",
        worst <= 1e-6 and elapsed < 60.0,
    )


def test_criterion_3_no_disruption_identity(capsys):
    scenario = load_scenario(analog_path())
    plan0, trace0 = run_replanning(
        scenario.network,
        scenario.initial_plan,
        Disruption(scenario.disruption.agent, 0.0),
        scenario.saa,
    )
    unchanged = not trace0.triggered and dumps_plan(plan0) == dumps_plan(scenario.initial_plan)

    chain = scenario_from(chain_dict())
    outcomes = simulate_many(chain.network, chain.initial_plan, ROUNDS, seed=9)
    zero = all(o.total_lateness() == 0.0 for o in outcomes)
    _report(
        capsys,
        3,
        "scale 0 returns the plan unchanged; degenerate initial-plan lateness exactly 0",
        unchanged and zero,
        f"unchanged={unchanged} zero={zero}",
    )


def test_criterion_4_disruption_pattern_on_the_bundled_scenario(capsys, analog):
    monitored = analog["monitored"]
    unrep = {
        scale: mean_total_lateness(analog["sims_unrepaired"][scale], monitored)
        for scale in SCALES
    }
    ok_a = unrep[0.2] < unrep[0.6] < unrep[1.0]

    ok_b = True
    for (scale, attitude), sims in analog["sims_replanned"].items():
        ok_b = ok_b and mean_total_lateness(sims, monitored) <= unrep[scale] + 1e-9

    net = analog["scenario"].network
    det = {
        attitude: aggregate_objectives(
            plan_objective_pairs(net, analog["replans"][(1.0, attitude)], monitored)
        ).lateness
        for attitude in ATTITUDES
    }
    ok_c = det["averse"] <= det["neutral"] + 1e-12
    elapsed = analog["elapsed"]
    _report(
        capsys,
        4,
        "unrepaired lateness strictly increases with scale "
        f"({unrep[0.2]:.2f} < {unrep[0.6]:.2f} < {unrep[1.0]:.2f}); "
        "re-planned <= unrepaired at every scale; "
        f"averse deterministic lateness {det['averse']:.3f} <= neutral {det['neutral']:.3f} "
        f"at scale 1.0 ({elapsed:.1f}s < 60s)",
        ok_a and ok_b and ok_c and elapsed < 60.0,
        f"a={ok_a} b={ok_b} c={ok_c} elapsed={elapsed:.1f}",
    )


def test_criterion_5_supplier_switch_pattern(capsys, analog):
    plans = {attitude: analog["replans"][(0.6, attitude)] for attitude in ATTITUDES}
    away = all(("S3", "A1", "cluster") not in plans[a].entries for a in ATTITUDES)
    onto = all(("S1", "A1", "cluster") in plans[a].entries for a in ATTITUDES)

    def s4(attitude):
        entry = plans[attitude].entries.get(("S4", "A2", "cluster"))
        return entry.quantity if entry is not None else 0.0

    shift = s4("averse") >= s4("neutral") - 1e-9
    _report(
        capsys,
        5,
        "at scale 0.6 the agent with a cheap trusted alternative leaves the disrupted "
        f"supplier under both attitudes; averse shorter-lead allocation {s4('averse'):.2f} "
        f">= neutral {s4('neutral'):.2f}",
        away and onto and shift,
        f"away={away} onto={onto} shift={shift}",
    )


def test_criterion_6_cli_runs_are_byte_identical(capsys, tmp_path):
    outs = [tmp_path / "run_a", tmp_path / "run_b"]
    for out in outs:
        result = subprocess.run(
            [
                sys.executable,
                "-m",
                "scnreplan.cli",
                "--scenario",
                analog_path(),
                "--rounds",
                "40",
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
            timeout=300,
        )
        assert result.returncode == 0, result.stderr
    names = sorted(p.name for p in outs[0].iterdir() if p.is_file())
    same_names = names == sorted(p.name for p in outs[1].iterdir() if p.is_file())
    same_bytes = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
    _report(
        capsys,
        6,
        f"two identical-flag CLI runs produce byte-identical outputs ({len(names)} files)",
        same_names and same_bytes,
    )


def test_criterion_7_invariant_suite(capsys, analog):
    scenario = analog["scenario"]
    net = scenario.network
    monitored = analog["monitored"]

    shares_ok = True
    for plan_key, plan, sims in (
        (None, scenario.initial_plan, analog["sims_unrepaired"][0.6]),
        ((0.6, "neutral"), analog["replans"][(0.6, "neutral")], analog["sims_replanned"][(0.6, "neutral")]),
    ):
        for outcome in sims:
            dist = lateness_distribution(plan, outcome, monitored)
            total = sum(share for _, share in dist)
            shares_ok = shares_ok and abs(total - 1.0) <= 1e-9
            shares_ok = shares_ok and all(0.0 < s <= 1.0 + 1e-12 for _, s in dist)

    responses_ok = True
    selections_ok = True
    conservation_ok = True
    for attitude in ATTITUDES:
        for rnd in analog["traces"][(0.6, attitude)].rounds:
            demand = {(r.demand_agent, r.product): r.quantity for r in rnd.requests}
            for resp in rnd.responses:
                per_product: dict[str, float] = {}
                for line in resp.lines:
                    d = demand[(line.demand_agent, line.product)]
                    responses_ok = responses_ok and line.within_quantity >= -1e-9
                    responses_ok = responses_ok and line.over_quantity >= -1e-9
                    responses_ok = (
                        responses_ok
                        and line.within_quantity + line.over_quantity <= d + 1e-9
                    )
                    per_product[line.product] = (
                        per_product.get(line.product, 0.0) + line.within_quantity
                    )
                for product, used in per_product.items():
                    cap = net.agents[resp.supplier].produces[product].capacity
                    responses_ok = responses_ok and used <= cap + 1e-9
            offers = {resp.supplier: resp for resp in rnd.responses}
            for decision in rnd.selections:
                ordered: dict[str, float] = {}
                for line in decision.lines:
                    offer = offers[line.supplier].line_for(decision.demand_agent, line.product)
                    offered = offer.within_quantity + offer.over_quantity
                    selections_ok = selections_ok and line.quantity <= offered + 1e-9
                    ordered[line.product] = ordered.get(line.product, 0.0) + line.quantity
                for (agent, product), quantity in demand.items():
                    if agent != decision.demand_agent:
                        continue
                    covered = ordered.get(product, 0.0) + decision.unmet.get(product, 0.0)
                    conservation_ok = conservation_ok and abs(covered - quantity) <= 1e-9

    _report(
        capsys,
        7,
        "lateness shares form a probability vector every round; response quantities "
        "respect capacity and demand bounds; selections never exceed offers; "
        "request coverage conserved within 1e-9",
        shares_ok and responses_ok and selections_ok and conservation_ok,
        f"shares={shares_ok} responses={responses_ok} selections={selections_ok} "
        f"conservation={conservation_ok}",
    )
