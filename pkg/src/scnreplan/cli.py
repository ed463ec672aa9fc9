"""Batch experiment runner: load a scenario, re-plan, simulate, report.

Runs one (scale, attitude) combination per ``--scale`` invocation or a grid
of them with ``--sweep``, writing all artifacts into an output directory:

- ``plan_initial.json``          the scenario's committed plan
- ``plan_replanned_<tag>.json``  plan after re-planning (one per run)
- ``trace_<tag>.json``           every protocol message of the run
- ``metrics_replanned_<tag>.csv`` / ``metrics_unrepaired_<tag>.csv``
                                 per-round lateness distributions
- ``summary.json``               deterministic + simulated aggregates

Identical flags and seed produce byte-identical files. Failures exit with a
single diagnostic line and a class-specific code: 2 bad scenario file, 3
validation error, 4 solver cap exceeded, 5 output I/O error.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path
from typing import Any, Sequence

from .metrics import (
    aggregate_objectives,
    customer_service_metrics,
    mean_total_lateness,
    write_distribution_csv,
    write_summary_json,
)
from .model import (
    AgentId,
    Disruption,
    FlowPlan,
    ProductId,
    SaaConfig,
    Scenario,
    ScenarioParseError,
    ScenarioValidationError,
    dumps_plan,
    load_scenario,
)
from .metrics import plan_objective_pairs
from .protocol import RISK_ATTITUDES, identify_disruption, run_replanning
from .simulator import simulate_many
from .solver import BinaryCapExceeded

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER_CAP = 4
EXIT_IO = 5


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scnreplan",
        description="Re-plan product flows after a lead-time disruption and "
        "evaluate the result by seeded simulation.",
    )
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    parser.add_argument(
        "--scale",
        type=float,
        default=None,
        help="disruption lead-time scale (defaults to the scenario's value)",
    )
    parser.add_argument(
        "--sweep",
        nargs="+",
        metavar="KEY=VALUES",
        default=None,
        help="grid run, e.g. --sweep scales=0.2,0.6,1.0 attitudes=neutral,averse",
    )
    parser.add_argument(
        "--attitudes",
        choices=sorted(RISK_ATTITUDES),
        default=None,
        help="uniform risk attitude for every agent",
    )
    parser.add_argument(
        "--attitude",
        action="append",
        metavar="AGENT=ATTITUDE",
        default=None,
        help="per-agent attitude override, comma-separable and repeatable",
    )
    parser.add_argument("--rounds", type=int, default=300, help="simulation rounds per run")
    parser.add_argument("--samples", type=int, default=None, help="SAA sample count override")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    parser.add_argument("--out", default="scnreplan_out", help="output directory")
    parser.add_argument(
        "--dump-models",
        action="store_true",
        help="write every solved optimization model into <out>/models/",
    )
    return parser


def _parse_sweep(items: Sequence[str]) -> tuple[list[float], list[str]]:
    scales: list[float] | None = None
    attitudes: list[str] = ["neutral"]
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise _CliError(f"sweep item {item!r} is not KEY=VALUES", EXIT_PARSE)
        if key == "scales":
            try:
                scales = [float(v) for v in value.split(",") if v]
            except ValueError:
                raise _CliError(f"sweep scales {value!r} are not numbers", EXIT_PARSE)
        elif key == "attitudes":
            attitudes = [v for v in value.split(",") if v]
            for a in attitudes:
                if a not in RISK_ATTITUDES:
                    raise _CliError(f"sweep attitude {a!r} unknown", EXIT_PARSE)
        else:
            raise _CliError(f"sweep key {key!r} unknown (scales, attitudes)", EXIT_PARSE)
    if not scales:
        raise _CliError("sweep needs scales=...", EXIT_PARSE)
    return scales, attitudes


def _parse_attitude_overrides(items: Sequence[str], scenario: Scenario) -> dict[AgentId, str]:
    overrides: dict[AgentId, str] = {}
    for chunk in items:
        for item in chunk.split(","):
            if not item:
                continue
            agent, sep, attitude = item.partition("=")
            if not sep:
                raise _CliError(f"attitude override {item!r} is not AGENT=ATTITUDE", EXIT_PARSE)
            if agent not in scenario.network.agents:
                raise _CliError(f"attitude override: unknown agent {agent!r}", EXIT_VALIDATION)
            if attitude not in RISK_ATTITUDES:
                raise _CliError(f"attitude override: unknown attitude {attitude!r}", EXIT_PARSE)
            overrides[agent] = attitude
    return overrides


def _tag(scale: float, attitude_label: str) -> str:
    return f"scale{scale:g}_{attitude_label}"


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


class _ModelDumper:
    """Writes each solved model to a numbered text file."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.count = 0

    def __call__(self, model: Any) -> None:
        self.count += 1
        path = self.directory / f"{self.count:04d}_{_safe_name(model.name)}.txt"
        path.write_text(model.to_text())


def _customer_demand(scenario: Scenario) -> dict[tuple[AgentId, ProductId], float]:
    """Demand per (customer, product) implied by the initial plan."""
    demand: dict[tuple[AgentId, ProductId], float] = {}
    net = scenario.network
    for (z, j, k), entry in sorted(scenario.initial_plan.entries.items()):
        if net.agents[j].kind == "customer":
            demand[(j, k)] = demand.get((j, k), 0.0) + entry.quantity
    return demand


def _run_one(
    scenario: Scenario,
    scale: float,
    attitude_label: str,
    overrides: dict[AgentId, str],
    cfg: SaaConfig,
    rounds: int,
    out: Path,
    dump: _ModelDumper | None,
) -> dict[str, Any]:
    net = scenario.network
    disruption = Disruption(
        agent=scenario.disruption.agent,
        lead_time_scale=scale,
        detection_time=scenario.disruption.detection_time,
    )
    monitored = sorted(
        {(n.receiver, n.product) for n in identify_disruption(net, scenario.initial_plan, disruption)}
    )
    if not monitored:
        raise _CliError(
            f"disrupted agent {disruption.agent!r} ships nothing in the initial plan",
            EXIT_VALIDATION,
        )

    plan, trace = run_replanning(
        net, scenario.initial_plan, disruption, cfg, attitudes=overrides, dump=dump
    )

    tag = _tag(scale, attitude_label)
    (out / f"plan_replanned_{tag}.json").write_text(dumps_plan(plan))
    (out / f"trace_{tag}.json").write_text(_dumps_json(trace.to_dict()))

    demand = _customer_demand(scenario)
    monitored_set = set(monitored)
    sims_new = simulate_many(net, plan, rounds, cfg.seed, disruption=disruption, demand=demand)
    sims_old = simulate_many(
        net, scenario.initial_plan, rounds, cfg.seed, disruption=disruption, demand=demand
    )
    write_distribution_csv(out / f"metrics_replanned_{tag}.csv", sims_new, plan, monitored_set)
    write_distribution_csv(out / f"metrics_unrepaired_{tag}.csv", sims_old, scenario.initial_plan, monitored_set)

    det = aggregate_objectives(plan_objective_pairs(net, plan, monitored))
    unmet_new = sum(u.quantity for u in trace.all_unmet())
    service_new = [customer_service_metrics(net, o) for o in sims_new]
    service_old = [customer_service_metrics(net, o) for o in sims_old]

    return {
        "tag": tag,
        "scale": scale,
        "attitudes": attitude_label if not overrides or attitude_label != "custom" else dict(sorted(overrides.items())),
        "triggered": trace.triggered,
        "rounds": len(trace.rounds),
        "deterministic": {
            "production_cost": det.production_cost,
            "lateness": det.lateness,
            "objective": det.objective,
        },
        "unmet_demand": unmet_new,
        "replanned_sim": {
            "mean_total_lateness": mean_total_lateness(sims_new, monitored_set),
            "mean_customer_lateness": sum(s[1] for s in service_new) / len(service_new),
            "mean_unmet_customer_demand": sum(s[0] for s in service_new) / len(service_new),
        },
        "unrepaired_sim": {
            "mean_total_lateness": mean_total_lateness(sims_old, monitored_set),
            "mean_customer_lateness": sum(s[1] for s in service_old) / len(service_old),
            "mean_unmet_customer_demand": sum(s[0] for s in service_old) / len(service_old),
        },
    }


def _dumps_json(obj: Any) -> str:
    import json

    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _print_summary(runs: Sequence[dict[str, Any]], monitored: Sequence[tuple[str, str]]) -> None:
    print("monitored flows:", ", ".join(f"{j}:{k}" for j, k in monitored))
    header = (
        f"{'scale':>6} {'attitudes':>10} {'cost':>10} {'lateness':>9} "
        f"{'objective':>12} {'sim replan':>10} {'sim unrep':>10}"
    )
    print(header)
    for run in runs:
        det = run["deterministic"]
        label = run["attitudes"] if isinstance(run["attitudes"], str) else "custom"
        print(
            f"{run['scale']:>6g} {label:>10} {det['production_cost']:>10.1f} "
            f"{det['lateness']:>9.3f} {det['objective']:>12.1f} "
            f"{run['replanned_sim']['mean_total_lateness']:>10.3f} "
            f"{run['unrepaired_sim']['mean_total_lateness']:>10.3f}"
        )
        if not run["triggered"]:
            print(f"{'':>6} no re-planning triggered (plan unchanged)")


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _main(args)
    except _CliError as exc:
        print(f"scnreplan: {exc}", file=sys.stderr)
        return exc.code
    except ScenarioParseError as exc:
        print(f"scnreplan: cannot load scenario: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ScenarioValidationError as exc:
        print(f"scnreplan: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BinaryCapExceeded as exc:
        print(f"scnreplan: optimization too large: {exc}", file=sys.stderr)
        return EXIT_SOLVER_CAP
    except OSError as exc:
        print(f"scnreplan: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def _main(args: argparse.Namespace) -> int:
    if args.scale is not None and args.sweep is not None:
        raise _CliError("--scale and --sweep are mutually exclusive", EXIT_PARSE)
    if args.attitudes is not None and args.attitude:
        raise _CliError("--attitudes and --attitude are mutually exclusive", EXIT_PARSE)
    if args.rounds < 1:
        raise _CliError("--rounds must be >= 1", EXIT_PARSE)
    if args.samples is not None and args.samples < 1:
        raise _CliError("--samples must be >= 1", EXIT_PARSE)

    scenario = load_scenario(args.scenario)
    cfg = SaaConfig(
        sample_count=args.samples if args.samples is not None else scenario.saa.sample_count,
        seed=args.seed if args.seed is not None else scenario.saa.seed,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dump: _ModelDumper | None = None
    if args.dump_models:
        models_dir = out / "models"
        models_dir.mkdir(exist_ok=True)
        dump = _ModelDumper(models_dir)

    (out / "plan_initial.json").write_text(dumps_plan(scenario.initial_plan))

    # one (scale, attitude set) per run
    runs_spec: list[tuple[float, str, dict[AgentId, str]]] = []
    if args.sweep is not None:
        scales, attitudes = _parse_sweep(args.sweep)
        for scale in scales:
            for attitude in attitudes:
                uniform = {a: attitude for a in scenario.network.agents}
                runs_spec.append((scale, attitude, uniform))
    else:
        scale = args.scale if args.scale is not None else scenario.disruption.lead_time_scale
        if args.attitude:
            overrides = _parse_attitude_overrides(args.attitude, scenario)
            runs_spec.append((scale, "custom", overrides))
        elif args.attitudes is not None:
            uniform = {a: args.attitudes for a in scenario.network.agents}
            runs_spec.append((scale, args.attitudes, uniform))
        else:
            runs_spec.append((scale, "scenario", {}))

    runs = []
    for scale, label, overrides in runs_spec:
        run = _run_one(scenario, scale, label, overrides, cfg, args.rounds, out, dump)
        if label == "custom":
            run["attitudes"] = dict(sorted(overrides.items()))
        runs.append(run)

    monitored = sorted(
        {
            (n.receiver, n.product)
            for n in identify_disruption(
                scenario.network,
                scenario.initial_plan,
                scenario.disruption,
            )
        }
    )
    summary = {
        "scenario": str(args.scenario),
        "rounds": args.rounds,
        "samples": cfg.sample_count,
        "seed": cfg.seed,
        "monitored": [list(pair) for pair in monitored],
        "runs": runs,
    }
    write_summary_json(out / "summary.json", summary)
    _print_summary(runs, monitored)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
