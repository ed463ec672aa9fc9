"""Generic exact solver for small mixed-binary linear programs.

A model holds continuous variables with finite lower bounds, a set of binary
variables, and linear rows whose coefficients may touch both groups.  A row
can be gated by ``active_if=(binary, value)``: it is enforced only in leaves
where that binary takes that value.  The objective is linear in the
continuous variables plus "bonus" terms, each a constant earned when every
binary in its requirement set equals 1 (a plain linear binary objective term
is a one-element bonus).

Solving is exact enumeration: depth-first search over binary assignments in
index order (0-branch first), interval-arithmetic propagation to discard
infeasible subtrees and tighten continuous bounds, an optimistic objective
bound for pruning, and a dense-simplex solve of the continuous subproblem at
each surviving leaf.  Pruning margins are padded so a leaf is only discarded
when it provably cannot beat the incumbent; together with the 0-first visit
order and strict-improvement updates this returns the optimum with the
lexicographically smallest binary vector among exact ties.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import simplex_solve

_SENSES = ("<=", "==", ">=")
_SENSE_CODE = {"<=": 0, "==": 1, ">=": 2}

ROW_TOL = 1e-9  # absolute slack granted in constraint checks


class SolverError(Exception):
    """Base class for solver failures; never swallowed silently."""


class BinaryCapExceeded(SolverError):
    pass


class UnboundedModel(SolverError):
    pass


class InfeasibleModel(SolverError):
    pass


@dataclass(frozen=True)
class LinearRow:
    """One linear constraint: cont-part + bin-part (sense) rhs."""

    cont: tuple[tuple[int, float], ...]
    bins: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    active_if: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.sense not in _SENSES:
            raise ValueError(f"unknown row sense {self.sense!r}")


@dataclass(frozen=True)
class Bonus:
    """Objective constant earned when all listed binaries equal 1."""

    requires: tuple[int, ...]
    value: float


@dataclass(frozen=True)
class MilpModel:
    n_vars: int
    n_bins: int
    lb: tuple[float, ...]
    ub: tuple[float, ...]
    objective: tuple[tuple[int, float], ...]
    bonuses: tuple[Bonus, ...]
    rows: tuple[LinearRow, ...]
    maximize: bool = True
    name: str = ""

    def validate(self) -> None:
        if len(self.lb) != self.n_vars or len(self.ub) != self.n_vars:
            raise ValueError(f"model {self.name!r}: bounds length != n_vars")
        for v, (lo, hi) in enumerate(zip(self.lb, self.ub)):
            if not np.isfinite(lo):
                raise ValueError(f"model {self.name!r}: variable {v} needs a finite lower bound")
            if hi < lo:
                raise ValueError(f"model {self.name!r}: variable {v} has ub < lb")
        for v, _ in self.objective:
            if not 0 <= v < self.n_vars:
                raise ValueError(f"model {self.name!r}: objective references unknown variable {v}")
        for bonus in self.bonuses:
            for bb in bonus.requires:
                if not 0 <= bb < self.n_bins:
                    raise ValueError(f"model {self.name!r}: bonus references unknown binary {bb}")
        for ri, row in enumerate(self.rows):
            for v, _ in row.cont:
                if not 0 <= v < self.n_vars:
                    raise ValueError(f"model {self.name!r}: row {ri} references unknown variable {v}")
            for bb, _ in row.bins:
                if not 0 <= bb < self.n_bins:
                    raise ValueError(f"model {self.name!r}: row {ri} references unknown binary {bb}")
            if row.active_if is not None:
                gb, gv = row.active_if
                if not 0 <= gb < self.n_bins or gv not in (0, 1):
                    raise ValueError(f"model {self.name!r}: row {ri} has a bad activation gate")

    def to_text(self) -> str:
        """Readable dump of the full model (for --dump-models)."""
        out = [f"model {self.name or '<unnamed>'}"]
        out.append(f"sense {'maximize' if self.maximize else 'minimize'}")
        out.append(f"continuous {self.n_vars}  binary {self.n_bins}")
        for v in range(self.n_vars):
            out.append(f"  x{v} in [{self.lb[v]:g}, {self.ub[v]:g}]")
        obj = " + ".join(f"{cf:g}*x{v}" for v, cf in self.objective) or "0"
        out.append(f"objective {obj}")
        for bonus in self.bonuses:
            req = " & ".join(f"z{bb}" for bb in bonus.requires) or "<always>"
            out.append(f"  bonus {bonus.value:g} if {req}")
        for ri, row in enumerate(self.rows):
            terms = [f"{cf:g}*x{v}" for v, cf in row.cont]
            terms += [f"{cf:g}*z{bb}" for bb, cf in row.bins]
            gate = ""
            if row.active_if is not None:
                gate = f"  [if z{row.active_if[0]} == {row.active_if[1]}]"
            out.append(f"  row {ri}: {' + '.join(terms) or '0'} {row.sense} {row.rhs:g}{gate}")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class MilpSolution:
    objective: float
    x: np.ndarray = field(compare=False)
    binaries: tuple[int, ...] = field(default=())
    leaves_evaluated: int = field(default=0, compare=False)
    nodes_visited: int = field(default=0, compare=False)


def _row_tol(rhs: float) -> float:
    return ROW_TOL * max(1.0, abs(rhs)) + ROW_TOL


class _Search:
    def __init__(self, model: MilpModel):
        self.model = model
        # canonical form: maximize
        if model.maximize:
            self.obj = list(model.objective)
            self.bonuses = list(model.bonuses)
        else:
            self.obj = [(v, -cf) for v, cf in model.objective]
            self.bonuses = [Bonus(b.requires, -b.value) for b in model.bonuses]
        self.best_obj = -np.inf
        self.best_x: np.ndarray | None = None
        self.best_bins: tuple[int, ...] | None = None
        self.leaves = 0
        self.nodes = 0
        self.base_lb = np.array(model.lb, dtype=np.float64)
        self.base_ub = np.array(model.ub, dtype=np.float64)

    # ---- interval helpers ----

    def _row_state(self, row: LinearRow, assign, lbv, ubv):
        """Bounds of the row's left side: fixed binary part folded into lo/hi."""
        lo = 0.0
        hi = 0.0
        for v, cf in row.cont:
            if cf > 0.0:
                lo += cf * lbv[v]
                hi += cf * ubv[v]
            elif cf < 0.0:
                lo += cf * ubv[v]
                hi += cf * lbv[v]
        for bb, cf in row.bins:
            a = assign[bb]
            if a >= 0:
                lo += cf * a
                hi += cf * a
            elif cf > 0.0:
                hi += cf
            else:
                lo += cf
        return lo, hi

    def _row_infeasible(self, row: LinearRow, assign, lbv, ubv) -> bool:
        lo, hi = self._row_state(row, assign, lbv, ubv)
        tol = _row_tol(row.rhs)
        if row.sense == "<=":
            return lo > row.rhs + tol
        if row.sense == ">=":
            return hi < row.rhs - tol
        return lo > row.rhs + tol or hi < row.rhs - tol

    def propagate(self, assign, lbv, ubv) -> bool:
        """Tighten bounds and force implied binaries; False when infeasible."""
        model = self.model
        for _ in range(8):
            changed = False
            for row in model.rows:
                if row.active_if is not None:
                    gb, gv = row.active_if
                    a = assign[gb]
                    if a == -1:
                        # if the active version cannot hold, the gate is decided
                        assign[gb] = gv
                        bad = self._row_infeasible(row, assign, lbv, ubv)
                        assign[gb] = -1
                        if bad:
                            assign[gb] = 1 - gv
                            changed = True
                        continue
                    if a != gv:
                        continue
                if self._row_infeasible(row, assign, lbv, ubv):
                    return False
                changed |= self._tighten(row, assign, lbv, ubv)
                forced = self._force_binaries(row, assign, lbv, ubv)
                if forced is None:
                    return False
                changed |= forced
            if not changed:
                return True
        return True

    def _tighten(self, row: LinearRow, assign, lbv, ubv) -> bool:
        if not row.cont:
            return False
        tol = _row_tol(row.rhs)
        bins_lo = 0.0
        bins_hi = 0.0
        for bb, cf in row.bins:
            a = assign[bb]
            if a >= 0:
                bins_lo += cf * a
                bins_hi += cf * a
            elif cf > 0.0:
                bins_hi += cf
            else:
                bins_lo += cf
        changed = False
        for v, cf in row.cont:
            if cf == 0.0:
                continue
            others_lo = bins_lo
            others_hi = bins_hi
            for w, cw in row.cont:
                if w == v or cw == 0.0:
                    continue
                if cw > 0.0:
                    others_lo += cw * lbv[w]
                    others_hi += cw * ubv[w]
                else:
                    others_lo += cw * ubv[w]
                    others_hi += cw * lbv[w]
            # intervals clamp at the opposite bound; an emptied interval is
            # caught by the row feasibility check on the following pass
            if row.sense in ("<=", "==") and np.isfinite(others_lo):
                cap = row.rhs + tol - others_lo
                if cf > 0.0:
                    new_ub = cap / cf
                    if new_ub < ubv[v]:
                        ubv[v] = max(new_ub, lbv[v])
                        changed = True
                else:
                    new_lb = cap / cf
                    if new_lb > lbv[v]:
                        lbv[v] = min(new_lb, ubv[v])
                        changed = True
            if row.sense in (">=", "==") and np.isfinite(others_hi):
                floor = row.rhs - tol - others_hi
                if cf > 0.0:
                    new_lb = floor / cf
                    if new_lb > lbv[v]:
                        lbv[v] = min(new_lb, ubv[v])
                        changed = True
                else:
                    new_ub = floor / cf
                    if new_ub < ubv[v]:
                        ubv[v] = max(new_ub, lbv[v])
                        changed = True
        return changed

    def _force_binaries(self, row: LinearRow, assign, lbv, ubv) -> bool | None:
        """Fix binaries whose opposite value makes the row impossible.

        Returns None when neither value works (node infeasible).
        """
        changed = False
        for bb, _ in row.bins:
            if assign[bb] != -1:
                continue
            ok = []
            for val in (0, 1):
                assign[bb] = val
                bad = self._row_infeasible(row, assign, lbv, ubv)
                assign[bb] = -1
                if not bad:
                    ok.append(val)
            if not ok:
                return None
            if len(ok) == 1:
                assign[bb] = ok[0]
                changed = True
        return changed

    def bound(self, assign, lbv, ubv) -> float:
        """Optimistic objective value for the subtree, padded to stay sound."""
        total = 0.0
        sumabs = 0.0
        for v, cf in self.obj:
            if cf == 0.0:
                continue
            term = cf * (ubv[v] if cf > 0.0 else lbv[v])
            total += term
            if np.isinf(total):
                return np.inf
            sumabs += abs(term)
        for bonus in self.bonuses:
            if bonus.value > 0.0:
                if all(assign[bb] != 0 for bb in bonus.requires):
                    total += bonus.value
                    sumabs += bonus.value
            elif bonus.value < 0.0:
                if all(assign[bb] == 1 for bb in bonus.requires):
                    total += bonus.value
                    sumabs -= bonus.value
        return total + 1e-9 + 1e-12 * sumabs

    # ---- leaf handling ----

    def evaluate_leaf(self, assign) -> None:
        model = self.model
        self.leaves += 1
        bonus_const = 0.0
        for bonus in self.bonuses:
            if all(assign[bb] == 1 for bb in bonus.requires):
                bonus_const += bonus.value

        cont_rows: list[tuple[LinearRow, float]] = []
        for row in model.rows:
            if row.active_if is not None:
                gb, gv = row.active_if
                if assign[gb] != gv:
                    continue
            folded = row.rhs
            for bb, cf in row.bins:
                folded -= cf * assign[bb]
            if row.cont:
                cont_rows.append((row, folded))
            else:
                tol = _row_tol(row.rhs)
                if row.sense == "<=" and 0.0 > folded + tol:
                    return
                if row.sense == ">=" and 0.0 < folded - tol:
                    return
                if row.sense == "==" and abs(folded) > tol:
                    return

        if model.n_vars == 0:
            obj = bonus_const
            x = np.zeros(0, dtype=np.float64)
        else:
            m = len(cont_rows)
            A = np.zeros((m, model.n_vars), dtype=np.float64)
            b = np.zeros(m, dtype=np.float64)
            senses = np.zeros(m, dtype=np.int8)
            for i, (row, folded) in enumerate(cont_rows):
                for v, cf in row.cont:
                    A[i, v] += cf
                b[i] = folded
                senses[i] = _SENSE_CODE[row.sense]
            c = np.zeros(model.n_vars, dtype=np.float64)
            for v, cf in self.obj:
                c[v] += cf
            status, x, lp_obj = simplex_solve(
                c, A, senses, b, self.base_lb, self.base_ub, maximize=True
            )
            if status == 1:
                return
            if status == 2:
                raise UnboundedModel(
                    f"model {model.name!r}: continuous subproblem is unbounded"
                )
            if status != 0:
                raise SolverError(f"model {model.name!r}: simplex stalled at a leaf")
            obj = lp_obj + bonus_const

        if obj > self.best_obj:
            self.best_obj = obj
            self.best_x = x
            self.best_bins = tuple(assign)

    # ---- search ----

    def run(self) -> None:
        assign = [-1] * self.model.n_bins
        self._dfs(assign, self.base_lb.copy(), self.base_ub.copy())

    def _dfs(self, assign, lbv, ubv) -> None:
        self.nodes += 1
        if not self.propagate(assign, lbv, ubv):
            return
        if self.bound(assign, lbv, ubv) <= self.best_obj:
            return
        branch = -1
        for bb in range(self.model.n_bins):
            if assign[bb] == -1:
                branch = bb
                break
        if branch == -1:
            self.evaluate_leaf(assign)
            return
        for val in (0, 1):
            child = list(assign)
            child[branch] = val
            self._dfs(child, lbv.copy(), ubv.copy())


def milp_solve_exact(model: MilpModel, binary_cap: int = 24) -> MilpSolution:
    """Exhaustively solve ``model``; exact up to LP tolerances.

    Raises BinaryCapExceeded when the model has more binaries than
    ``binary_cap``, UnboundedModel / InfeasibleModel when the model is
    defective, and SolverError on internal failures.
    """
    model.validate()
    if model.n_bins > binary_cap:
        raise BinaryCapExceeded(
            f"model {model.name!r} has {model.n_bins} binaries, cap is {binary_cap}"
        )
    search = _Search(model)
    search.run()
    if search.best_bins is None:
        raise InfeasibleModel(f"model {model.name!r} has no feasible point")
    obj = search.best_obj if model.maximize else -search.best_obj
    return MilpSolution(
        objective=obj,
        x=search.best_x if search.best_x is not None else np.zeros(model.n_vars),
        binaries=search.best_bins,
        leaves_evaluated=search.leaves,
        nodes_visited=search.nodes,
    )
