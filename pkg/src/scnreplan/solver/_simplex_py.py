"""Dense two-phase primal simplex for linear programs with bounded variables.

Pure-Python reference backend.  The compiled backend in ``_simplex.pyx``
implements the same algorithm with the same pivot rules; within one backend
results are fully deterministic.

Problem form::

    min / max   c . x
    subject to  A[i] . x  (<= | == | >=)  b[i]     for every row i
                lb <= x <= ub                      (lb finite, ub may be +inf)

Senses are encoded as integers: 0 = "<=", 1 = "==", 2 = ">=".

Returned status codes: 0 optimal, 1 infeasible, 2 unbounded, 3 stalled
(iteration cap hit; callers should treat this as an error, never as a
result).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
STALLED = 3

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2

_PIV_TOL = 1e-10
_RATIO_TIE = 1e-12
_DEGEN_LIMIT = 300


def simplex_solve(c, A, senses, b, lb, ub, maximize=False, max_iter=0):
    """Solve one LP; returns ``(status, x, objective)``.

    ``x`` is meaningful only for status 0.  Raises ValueError on malformed
    input (non-finite data, infinite lower bounds, lb > ub).
    """
    c = np.ascontiguousarray(c, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    senses = np.ascontiguousarray(senses, dtype=np.int8)
    lb = np.ascontiguousarray(lb, dtype=np.float64)
    ub = np.ascontiguousarray(ub, dtype=np.float64)
    n = c.shape[0]
    m = b.shape[0]
    A = np.ascontiguousarray(A, dtype=np.float64).reshape(m, n)

    if not np.isfinite(c).all() or not np.isfinite(b).all() or not np.isfinite(A).all():
        raise ValueError("objective, rhs and matrix entries must be finite")
    if not np.isfinite(lb).all():
        raise ValueError("every variable needs a finite lower bound")
    if np.any(ub < lb):
        raise ValueError("found ub < lb")
    if senses.shape[0] != m or np.any((senses < 0) | (senses > 2)):
        raise ValueError("senses must be 0 (<=), 1 (==) or 2 (>=), one per row")

    cost = -c if maximize else c

    n_slack = int(np.sum(senses != 1))
    art_cap = m
    ncols = n + n_slack + art_cap

    T = np.zeros((m, ncols), dtype=np.float64)
    col_lb = np.zeros(ncols, dtype=np.float64)
    col_ub = np.full(ncols, np.inf, dtype=np.float64)
    col_lb[:n] = lb
    col_ub[:n] = ub

    basis = np.empty(m, dtype=np.int64)
    xB = np.zeros(m, dtype=np.float64)
    varstat = np.full(ncols, _AT_LOWER, dtype=np.int8)

    # residuals of each row at the all-at-lower-bound starting point
    resid = np.empty(m, dtype=np.float64)
    for i in range(m):
        s = 0.0
        for j in range(n):
            s += A[i, j] * lb[j]
        resid[i] = b[i] - s

    art_start = n + n_slack
    n_art = 0
    slack_at = n
    for i in range(m):
        r = resid[i]
        sense = senses[i]
        if sense == 0:  # <=  : A x + s = b
            if r >= 0.0:
                T[i, :n] = A[i]
                T[i, slack_at] = 1.0
                basis[i] = slack_at
                xB[i] = r
            else:
                T[i, :n] = -A[i]
                T[i, slack_at] = -1.0
                a = art_start + n_art
                n_art += 1
                T[i, a] = 1.0
                basis[i] = a
                xB[i] = -r
            slack_at += 1
        elif sense == 2:  # >=  : A x - s = b
            if r <= 0.0:
                T[i, :n] = -A[i]
                T[i, slack_at] = 1.0
                basis[i] = slack_at
                xB[i] = -r
            else:
                T[i, :n] = A[i]
                T[i, slack_at] = -1.0
                a = art_start + n_art
                n_art += 1
                T[i, a] = 1.0
                basis[i] = a
                xB[i] = r
            slack_at += 1
        else:  # ==
            if r >= 0.0:
                T[i, :n] = A[i]
            else:
                T[i, :n] = -A[i]
            a = art_start + n_art
            n_art += 1
            T[i, a] = 1.0
            basis[i] = a
            xB[i] = abs(r)

    ncols_used = art_start + n_art
    T = T[:, :ncols_used]
    col_lb = col_lb[:ncols_used]
    col_ub = col_ub[:ncols_used]
    varstat = varstat[:ncols_used]
    varstat[basis] = _BASIC
    n_eligible = art_start  # artificial columns never enter the basis

    bscale = 1.0
    for i in range(m):
        if abs(b[i]) > bscale:
            bscale = abs(b[i])
    feas_tol = 1e-7 * bscale

    if max_iter <= 0:
        max_iter = 2000 + 50 * (m + ncols_used)

    # ---- phase 1: minimise the sum of artificial variables ----
    if n_art > 0:
        objrow = np.zeros(ncols_used, dtype=np.float64)
        objrow[art_start:ncols_used] = 1.0
        for i in range(m):
            if basis[i] >= art_start:
                objrow -= T[i]
        status = _iterate(
            T, objrow, basis, xB, varstat, col_lb, col_ub, n_eligible, 1.0, max_iter
        )
        if status == STALLED:
            return STALLED, np.zeros(n), 0.0
        infeas = 0.0
        for i in range(m):
            if basis[i] >= art_start:
                infeas += xB[i]
        if infeas > feas_tol:
            return INFEASIBLE, np.zeros(n), 0.0
        # degenerate artificials still in the basis: swap them out when the
        # row has any usable pivot, otherwise the row is redundant
        for i in range(m):
            if basis[i] < art_start:
                continue
            piv_col = -1
            for j in range(n_eligible):
                if varstat[j] != _BASIC and abs(T[i, j]) > _PIV_TOL:
                    piv_col = j
                    break
            if piv_col < 0:
                xB[i] = 0.0
                continue
            enter_val = col_lb[piv_col] if varstat[piv_col] == _AT_LOWER else col_ub[piv_col]
            piv = T[i, piv_col]
            T[i] /= piv
            for k in range(m):
                if k != i:
                    f = T[k, piv_col]
                    if f != 0.0:
                        T[k] -= f * T[i]
            varstat[basis[i]] = _AT_LOWER
            varstat[piv_col] = _BASIC
            basis[i] = piv_col
            xB[i] = enter_val

    # ---- phase 2: the real objective ----
    cost_scale = 1.0
    for j in range(n):
        if abs(cost[j]) > cost_scale:
            cost_scale = abs(cost[j])
    objrow = np.zeros(ncols_used, dtype=np.float64)
    objrow[:n] = cost
    for i in range(m):
        bj = basis[i]
        if bj < n:
            cb = cost[bj]
            if cb != 0.0:
                objrow -= cb * T[i]
    status = _iterate(
        T, objrow, basis, xB, varstat, col_lb, col_ub, n_eligible, cost_scale, max_iter
    )
    if status != OPTIMAL:
        return status, np.zeros(n), 0.0

    x = np.empty(n, dtype=np.float64)
    for j in range(n):
        if varstat[j] == _AT_LOWER:
            x[j] = lb[j]
        elif varstat[j] == _AT_UPPER:
            x[j] = ub[j]
        else:
            x[j] = 0.0
    for i in range(m):
        bj = basis[i]
        if bj < n:
            x[bj] = xB[i]
    obj = 0.0
    for j in range(n):
        obj += c[j] * x[j]
    return OPTIMAL, x, obj


def _iterate(T, objrow, basis, xB, varstat, col_lb, col_ub, n_eligible, cost_scale, max_iter):
    """Primal simplex iterations on the prepared tableau (minimisation)."""
    m = T.shape[0]
    dual_tol = 1e-9 * cost_scale
    bland = False
    degen = 0

    for _ in range(max_iter):
        # entering variable
        enter = -1
        best = dual_tol
        for j in range(n_eligible):
            st = varstat[j]
            if st == _BASIC:
                continue
            if col_ub[j] - col_lb[j] <= 0.0:
                continue  # fixed variable can never move
            d = objrow[j]
            score = -d if st == _AT_LOWER else d
            if score > best:
                if bland:
                    if score > dual_tol:
                        enter = j
                        break
                else:
                    best = score
                    enter = j
        if enter < 0:
            return OPTIMAL

        at_lower = varstat[enter] == _AT_LOWER
        direction = 1.0 if at_lower else -1.0

        # ratio test: smallest step, ties to the smallest variable index
        t_best = col_ub[enter] - col_lb[enter]
        leave_row = -1
        leave_idx = enter
        leave_to_upper = False
        col = T[:, enter]
        for i in range(m):
            eff = direction * col[i]
            if eff > _PIV_TOL:
                room = xB[i] - col_lb[basis[i]]
                if room < 0.0:
                    room = 0.0
                t_i = room / eff
                hit_upper = False
            elif eff < -_PIV_TOL:
                cap = col_ub[basis[i]]
                if cap == np.inf:
                    continue
                room = cap - xB[i]
                if room < 0.0:
                    room = 0.0
                t_i = room / (-eff)
                hit_upper = True
            else:
                continue
            if t_i < t_best - _RATIO_TIE:
                t_best = t_i
                leave_row = i
                leave_idx = basis[i]
                leave_to_upper = hit_upper
            elif t_i <= t_best + _RATIO_TIE and basis[i] < leave_idx:
                t_best = t_i if t_i < t_best else t_best
                leave_row = i
                leave_idx = basis[i]
                leave_to_upper = hit_upper

        if not np.isfinite(t_best):
            return UNBOUNDED

        if t_best <= _RATIO_TIE:
            degen += 1
            if degen > _DEGEN_LIMIT:
                bland = True
        else:
            degen = 0

        if t_best != 0.0:
            shift = direction * t_best
            xB -= shift * col

        if leave_row < 0:
            # the entering variable just slides to its other bound
            varstat[enter] = _AT_UPPER if at_lower else _AT_LOWER
            continue

        start_val = col_lb[enter] if at_lower else col_ub[enter]
        enter_val = start_val + direction * t_best
        leaving = basis[leave_row]
        varstat[leaving] = _AT_UPPER if leave_to_upper else _AT_LOWER

        piv = T[leave_row, enter]
        T[leave_row] /= piv
        prow = T[leave_row]
        for i in range(m):
            if i != leave_row:
                f = T[i, enter]
                if f != 0.0:
                    T[i] -= f * prow
        f = objrow[enter]
        if f != 0.0:
            objrow -= f * prow

        basis[leave_row] = enter
        varstat[enter] = _BASIC
        xB[leave_row] = enter_val

    return STALLED
