"""Exact MILP search: worked examples, enumeration cross-check, guards."""

from __future__ import annotations

import numpy as np
import pytest

from _oracles import milp_oracle
from scnreplan.solver import (
    BinaryCapExceeded,
    Bonus,
    InfeasibleModel,
    LinearRow,
    MilpModel,
    MilpSolution,
    UnboundedModel,
    milp_solve_exact,
)


def _model(**kw):
    defaults = dict(
        n_vars=0,
        n_bins=0,
        lb=(),
        ub=(),
        objective=(),
        bonuses=(),
        rows=(),
        maximize=True,
        name="t",
    )
    defaults.update(kw)
    return MilpModel(**defaults)


def test_pure_lp_model():
    model = _model(
        n_vars=2,
        lb=(0.0, 0.0),
        ub=(3.0, 2.0),
        objective=((0, 1.0), (1, 1.0)),
        rows=(LinearRow(cont=((0, 1.0), (1, 1.0)), bins=(), sense="<=", rhs=4.0),),
    )
    sol = milp_solve_exact(model)
    assert sol.objective == pytest.approx(4.0, abs=1e-9)
    assert sol.binaries == ()


def test_indicator_links_quantity_to_binary():
    # x may only flow while its binary is on
    model = _model(
        n_vars=1,
        n_bins=1,
        lb=(0.0,),
        ub=(5.0,),
        objective=((0, 1.0),),
        rows=(LinearRow(cont=((0, 1.0),), bins=((0, -100.0),), sense="<=", rhs=0.0),),
    )
    sol = milp_solve_exact(model)
    assert sol.objective == pytest.approx(5.0)
    assert sol.binaries == (1,)


def test_active_if_gate_enforces_equality_only_when_set():
    # demand-met flag forces x == 6 but capacity row caps x at 4, so the
    # flag must stay 0 and x stops at the cap
    model = _model(
        n_vars=1,
        n_bins=1,
        lb=(0.0,),
        ub=(6.0,),
        objective=((0, 1.0),),
        bonuses=(Bonus(requires=(0,), value=100.0),),
        rows=(
            LinearRow(cont=((0, 1.0),), bins=(), sense="<=", rhs=4.0),
            LinearRow(cont=((0, 1.0),), bins=(), sense="==", rhs=6.0, active_if=(0, 1)),
        ),
    )
    sol = milp_solve_exact(model)
    assert sol.binaries == (0,)
    assert sol.objective == pytest.approx(4.0)


def test_bonus_requires_all_binaries():
    model = _model(
        n_vars=0,
        n_bins=2,
        bonuses=(Bonus(requires=(0, 1), value=7.0),),
        rows=(LinearRow(cont=(), bins=((0, 1.0), (1, 1.0)), sense="<=", rhs=1.0),),
    )
    sol = milp_solve_exact(model)
    # both bits cannot be on together, so the bonus is unreachable
    assert sol.objective == pytest.approx(0.0)


def test_tie_break_prefers_zero_assignments():
    # symmetric bits: turning either one on earns the same bonus
    model = _model(
        n_vars=0,
        n_bins=2,
        bonuses=(
            Bonus(requires=(0,), value=5.0),
            Bonus(requires=(1,), value=5.0),
        ),
        rows=(LinearRow(cont=(), bins=((0, 1.0), (1, 1.0)), sense="<=", rhs=1.0),),
    )
    sol = milp_solve_exact(model)
    assert sol.objective == pytest.approx(5.0)
    assert sol.binaries == (0, 1)


def test_minimize_with_penalty_bonus():
    # in a minimize model a positive bonus acts as a selection penalty
    model = _model(
        n_vars=1,
        n_bins=1,
        lb=(0.0,),
        ub=(4.0,),
        maximize=False,
        objective=((0, 1.0),),
        bonuses=(Bonus(requires=(0,), value=2.0),),
        rows=(
            LinearRow(cont=((0, 1.0),), bins=((0, -4.0),), sense="<=", rhs=0.0),
            LinearRow(cont=((0, 1.0),), bins=(), sense=">=", rhs=3.0),
        ),
    )
    sol = milp_solve_exact(model)
    assert sol.binaries == (1,)
    assert sol.objective == pytest.approx(5.0)


def test_infeasible_model_raises():
    model = _model(
        n_vars=1,
        lb=(0.0,),
        ub=(1.0,),
        objective=((0, 1.0),),
        rows=(LinearRow(cont=((0, 1.0),), bins=(), sense=">=", rhs=2.0),),
    )
    with pytest.raises(InfeasibleModel):
        milp_solve_exact(model)


def test_unbounded_model_raises():
    model = _model(
        n_vars=1,
        lb=(0.0,),
        ub=(float("inf"),),
        objective=((0, 1.0),),
    )
    with pytest.raises(UnboundedModel):
        milp_solve_exact(model)


def test_binary_cap():
    rows = tuple(
        LinearRow(cont=(), bins=((bb, 1.0),), sense="<=", rhs=0.0) for bb in range(25)
    )
    model = _model(n_bins=25, rows=rows)
    with pytest.raises(BinaryCapExceeded):
        milp_solve_exact(model)
    assert milp_solve_exact(model, binary_cap=25).objective == 0.0


def test_validate_rejects_bad_references():
    with pytest.raises(ValueError, match="objective"):
        _model(n_vars=1, lb=(0.0,), ub=(1.0,), objective=((3, 1.0),)).validate()
    with pytest.raises(ValueError, match="bonus"):
        _model(n_bins=1, bonuses=(Bonus(requires=(2,), value=1.0),)).validate()
    with pytest.raises(ValueError, match="ub < lb"):
        _model(n_vars=1, lb=(2.0,), ub=(1.0,)).validate()
    with pytest.raises(ValueError, match="finite lower bound"):
        _model(n_vars=1, lb=(-float("inf"),), ub=(1.0,)).validate()


def test_to_text_lists_rows_and_bounds():
    model = _model(
        n_vars=1,
        n_bins=1,
        lb=(0.0,),
        ub=(2.0,),
        objective=((0, 3.0),),
        bonuses=(Bonus(requires=(0,), value=1.0),),
        rows=(LinearRow(cont=((0, 1.0),), bins=((0, -2.0),), sense="<=", rhs=0.0),),
        name="demo",
    )
    text = model.to_text()
    assert "model demo" in text
    assert "x0 in [0, 2]" in text
    assert "row 0" in text
    assert "bonus 1" in text


def _random_model(rng):
    n_vars = int(rng.integers(1, 5))
    n_bins = int(rng.integers(0, 7))
    lb = tuple(0.0 for _ in range(n_vars))
    ub = tuple(float(rng.integers(1, 8)) for _ in range(n_vars))
    objective = tuple((v, float(rng.integers(-4, 5))) for v in range(n_vars))
    rows = []
    for _ in range(int(rng.integers(1, 6))):
        cont = tuple(
            (v, float(rng.integers(-3, 4)))
            for v in range(n_vars)
            if rng.random() < 0.7
        )
        bins = tuple(
            (bb, float(rng.integers(-5, 6)))
            for bb in range(n_bins)
            if rng.random() < 0.4
        )
        sense = ("<=", ">=", "==")[int(rng.integers(0, 3))]
        rhs = float(rng.integers(-2, 9))
        active_if = None
        if n_bins and rng.random() < 0.25:
            active_if = (int(rng.integers(0, n_bins)), int(rng.integers(0, 2)))
        if not cont and not bins:
            continue
        rows.append(LinearRow(cont=cont, bins=bins, sense=sense, rhs=rhs, active_if=active_if))
    bonuses = tuple(
        Bonus(
            requires=tuple(
                sorted(set(int(b) for b in rng.integers(0, n_bins, size=rng.integers(1, 3))))
            ),
            value=float(rng.integers(-6, 7)),
        )
        for _ in range(int(rng.integers(0, 3)))
        if n_bins
    )
    return _model(
        n_vars=n_vars,
        n_bins=n_bins,
        lb=lb,
        ub=ub,
        objective=objective,
        bonuses=bonuses,
        rows=tuple(rows),
        maximize=bool(rng.random() < 0.5),
    )


def test_matches_enumeration_on_random_models():
    checked = 0
    for i in range(60):
        rng = np.random.default_rng(7_000 + i)
        model = _random_model(rng)
        model.validate()
        want = milp_oracle(model)
        if want is None:
            with pytest.raises(InfeasibleModel):
                milp_solve_exact(model)
            continue
        sol = milp_solve_exact(model)
        assert sol.objective == pytest.approx(want, abs=1e-6), f"instance {i}"
        checked += 1
    assert checked >= 30


def test_solution_is_deterministic():
    rng = np.random.default_rng(7_003)
    model = _random_model(rng)
    first = milp_solve_exact(model)
    second = milp_solve_exact(model)
    assert first.objective == second.objective
    assert first.binaries == second.binaries
    assert np.array_equal(first.x, second.x)
    assert isinstance(first, MilpSolution)
