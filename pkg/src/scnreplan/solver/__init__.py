"""Exact mixed-integer solving on top of a dense simplex kernel.

Two interchangeable kernels exist: a Cython extension (``_simplex``) and a
pure-Python twin (``_simplex_py``).  The compiled one is picked when it
imported cleanly; set ``SCNREPLAN_PURE=1`` to force the fallback.  Both use
the same algorithm and pivot rules, so any differences are confined to
floating-point rounding at degenerate ties.
"""

from __future__ import annotations

import os

if os.environ.get("SCNREPLAN_PURE"):
    from . import _simplex_py as _kernel
else:
    try:
        from . import _simplex as _kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _simplex_py as _kernel

simplex_solve = _kernel.simplex_solve
BACKEND = _kernel.BACKEND_NAME

LP_OPTIMAL = 0
LP_INFEASIBLE = 1
LP_UNBOUNDED = 2
LP_STALLED = 3

from .milp import (  # noqa: E402
    Bonus,
    BinaryCapExceeded,
    InfeasibleModel,
    LinearRow,
    MilpModel,
    MilpSolution,
    SolverError,
    UnboundedModel,
    milp_solve_exact,
)

__all__ = [
    "BACKEND",
    "Bonus",
    "BinaryCapExceeded",
    "InfeasibleModel",
    "LP_INFEASIBLE",
    "LP_OPTIMAL",
    "LP_STALLED",
    "LP_UNBOUNDED",
    "LinearRow",
    "MilpModel",
    "MilpSolution",
    "SolverError",
    "UnboundedModel",
    "milp_solve_exact",
    "simplex_solve",
]
