"""Compare the compiled simplex kernel against the pure-Python fallback.

Two workloads run in two subprocesses, one per kernel (the fallback is
forced with SCNREPLAN_PURE=1), so each process binds its backend at import:

- ``simplex``: a seeded batch of dense bounded LPs through simplex_solve
- ``replan``:  a full re-planning run on the bundled scenario

Usage: python3 benchmarks/bench_solver.py [--repeat N]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _random_lp(rng):
    n = int(rng.integers(8, 30))
    m = int(rng.integers(5, 25))
    import numpy as np

    c = rng.normal(size=n)
    a = rng.normal(size=(m, n))
    b = rng.uniform(1.0, 10.0, size=m)
    senses = rng.integers(0, 3, size=m).astype(np.int8)
    lb = np.zeros(n)
    ub = rng.uniform(1.0, 8.0, size=n)
    return c, a, senses, b, lb, ub


def _bench_simplex(repeat: int) -> float:
    import numpy as np

    from scnreplan.solver import simplex_solve

    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        solved = 0
        for i in range(300):
            rng = np.random.default_rng(2_024 + i)
            c, a, senses, b, lb, ub = _random_lp(rng)
            status, _, _ = simplex_solve(c, a, senses, b, lb, ub, maximize=bool(i % 2))
            solved += status in (0, 1, 2)
        assert solved == 300
        best = min(best, time.perf_counter() - t0)
    return best


def _bench_replan(repeat: int) -> float:
    from importlib import resources

    from scnreplan.model import load_scenario
    from scnreplan.protocol import run_replanning

    path = str(resources.files("scnreplan.data") / "cockpit_analog.json")
    scenario = load_scenario(path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        plan, trace = run_replanning(
            scenario.network, scenario.initial_plan, scenario.disruption, scenario.saa
        )
        assert trace.triggered
        best = min(best, time.perf_counter() - t0)
    return best


def _inner(repeat: int) -> None:
    from scnreplan.solver import BACKEND

    result = {
        "backend": BACKEND,
        "simplex": _bench_simplex(repeat),
        "replan": _bench_replan(repeat),
    }
    print(json.dumps(result))


def _outer(repeat: int) -> int:
    results = {}
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("SCNREPLAN_PURE", None)
        if pure:
            env["SCNREPLAN_PURE"] = "1"
        proc = subprocess.run(
            [sys.executable, __file__, "--inner", "--repeat", str(repeat)],
            capture_output=True,
            text=True,
            env=env,
        )
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            return 1
        payload = json.loads(proc.stdout.strip().splitlines()[-1])
        results[payload["backend"]] = payload

    if set(results) != {"compiled", "python"}:
        backends = ", ".join(sorted(results))
        print(f"only the {backends} kernel is available; nothing to compare")
        return 0

    print(f"{'workload':<28} {'compiled':>10} {'python':>10} {'speedup':>8}")
    for workload, label in (("simplex", "300 random LPs"), ("replan", "bundled re-planning run")):
        fast = results["compiled"][workload]
        slow = results["python"][workload]
        print(f"{label:<28} {fast:>9.3f}s {slow:>9.3f}s {slow / fast:>7.1f}x")
    return 0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3, help="best-of repetitions")
    parser.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.inner:
        _inner(args.repeat)
        return 0
    return _outer(args.repeat)


if __name__ == "__main__":
    sys.exit(main())
