# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Dense two-phase primal simplex with bounded variables (compiled backend).

Same algorithm and pivot rules as ``_simplex_py``; see that module for the
problem form and status codes.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"

OPTIMAL = 0
INFEASIBLE = 1
UNBOUNDED = 2
STALLED = 3

cdef int _OPTIMAL = 0
cdef int _INFEASIBLE = 1
cdef int _UNBOUNDED = 2
cdef int _STALLED = 3

cdef double _PIV_TOL = 1e-10
cdef double _RATIO_TIE = 1e-12
cdef int _DEGEN_LIMIT = 300

cdef double INF = float("inf")


cdef int _iterate(double[:, ::1] T, double[::1] objrow, long long[::1] basis,
                  double[::1] xB, signed char[::1] varstat, double[::1] col_lb,
                  double[::1] col_ub, Py_ssize_t n_eligible, double cost_scale,
                  long long max_iter) nogil:
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t ncols = T.shape[1]
    cdef double dual_tol = 1e-9 * cost_scale
    cdef bint bland = False
    cdef int degen = 0
    cdef long long it
    cdef Py_ssize_t enter, leave_row, j, i, leave_idx
    cdef double best, d, score, direction, t_best, t_i, eff, room, cap
    cdef double shift, start_val, enter_val, piv, f
    cdef bint at_lower, hit_upper, leave_to_upper
    cdef signed char st

    for it in range(max_iter):
        enter = -1
        best = dual_tol
        for j in range(n_eligible):
            st = varstat[j]
            if st == 2:
                continue
            if col_ub[j] - col_lb[j] <= 0.0:
                continue
            d = objrow[j]
            if st == 0:
                score = -d
            else:
                score = d
            if score > best:
                if bland:
                    if score > dual_tol:
                        enter = j
                        break
                else:
                    best = score
                    enter = j
        if enter < 0:
            return _OPTIMAL

        at_lower = varstat[enter] == 0
        direction = 1.0 if at_lower else -1.0

        t_best = col_ub[enter] - col_lb[enter]
        leave_row = -1
        leave_idx = enter
        leave_to_upper = False
        for i in range(m):
            eff = direction * T[i, enter]
            if eff > _PIV_TOL:
                room = xB[i] - col_lb[basis[i]]
                if room < 0.0:
                    room = 0.0
                t_i = room / eff
                hit_upper = False
            elif eff < -_PIV_TOL:
                cap = col_ub[basis[i]]
                if cap == INF:
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
                if t_i < t_best:
                    t_best = t_i
                leave_row = i
                leave_idx = basis[i]
                leave_to_upper = hit_upper

        if t_best == INF:
            return _UNBOUNDED

        if t_best <= _RATIO_TIE:
            degen += 1
            if degen > _DEGEN_LIMIT:
                bland = True
        else:
            degen = 0

        if t_best != 0.0:
            shift = direction * t_best
            for i in range(m):
                xB[i] = xB[i] - shift * T[i, enter]

        if leave_row < 0:
            varstat[enter] = 1 if at_lower else 0
            continue

        if at_lower:
            start_val = col_lb[enter]
        else:
            start_val = col_ub[enter]
        enter_val = start_val + direction * t_best
        varstat[basis[leave_row]] = 1 if leave_to_upper else 0

        piv = T[leave_row, enter]
        for j in range(ncols):
            T[leave_row, j] = T[leave_row, j] / piv
        for i in range(m):
            if i != leave_row:
                f = T[i, enter]
                if f != 0.0:
                    for j in range(ncols):
                        T[i, j] = T[i, j] - f * T[leave_row, j]
        f = objrow[enter]
        if f != 0.0:
            for j in range(ncols):
                objrow[j] = objrow[j] - f * T[leave_row, j]

        basis[leave_row] = enter
        varstat[enter] = 2
        xB[leave_row] = enter_val

    return _STALLED


def simplex_solve(c, A, senses, b, lb, ub, maximize=False, max_iter=0):
    """Solve one LP; returns ``(status, x, objective)``."""
    cdef cnp.ndarray[double, ndim=1] c_arr = np.ascontiguousarray(c, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] b_arr = np.ascontiguousarray(b, dtype=np.float64)
    cdef cnp.ndarray[signed char, ndim=1] sense_arr = np.ascontiguousarray(senses, dtype=np.int8)
    cdef cnp.ndarray[double, ndim=1] lb_arr = np.ascontiguousarray(lb, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ub_arr = np.ascontiguousarray(ub, dtype=np.float64)
    cdef Py_ssize_t n = c_arr.shape[0]
    cdef Py_ssize_t m = b_arr.shape[0]
    cdef cnp.ndarray[double, ndim=2] A_arr = np.ascontiguousarray(A, dtype=np.float64).reshape(m, n)

    if not np.isfinite(c_arr).all() or not np.isfinite(b_arr).all() or not np.isfinite(A_arr).all():
        raise ValueError("objective, rhs and matrix entries must be finite")
    if not np.isfinite(lb_arr).all():
        raise ValueError("every variable needs a finite lower bound")
    if np.any(ub_arr < lb_arr):
        raise ValueError("found ub < lb")
    if sense_arr.shape[0] != m or np.any((sense_arr < 0) | (sense_arr > 2)):
        raise ValueError("senses must be 0 (<=), 1 (==) or 2 (>=), one per row")

    cdef cnp.ndarray[double, ndim=1] cost = -c_arr if maximize else c_arr.copy()

    # pass 1: residuals at the all-at-lower-bound point, artificial count
    cdef cnp.ndarray[double, ndim=1] resid_arr = np.zeros(m)
    cdef double[::1] resid = resid_arr
    cdef Py_ssize_t n_slack = 0
    cdef Py_ssize_t n_art = 0
    cdef Py_ssize_t i, j
    cdef double s, r
    cdef signed char sense
    for i in range(m):
        s = 0.0
        for j in range(n):
            s += A_arr[i, j] * lb_arr[j]
        resid[i] = b_arr[i] - s
        sense = sense_arr[i]
        if sense != 1:
            n_slack += 1
        if sense == 1:
            n_art += 1
        elif sense == 0 and resid[i] < 0.0:
            n_art += 1
        elif sense == 2 and resid[i] > 0.0:
            n_art += 1

    cdef Py_ssize_t art_start = n + n_slack
    cdef Py_ssize_t ncols = art_start + n_art

    cdef cnp.ndarray[double, ndim=2] T_arr = np.zeros((m, ncols))
    cdef cnp.ndarray[double, ndim=1] col_lb_arr = np.zeros(ncols)
    cdef cnp.ndarray[double, ndim=1] col_ub_arr = np.full(ncols, np.inf)
    cdef cnp.ndarray[long long, ndim=1] basis_arr = np.zeros(m, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] xB_arr = np.zeros(m)
    cdef cnp.ndarray[signed char, ndim=1] varstat_arr = np.zeros(ncols, dtype=np.int8)

    cdef double[:, ::1] T = T_arr
    cdef double[::1] clb = col_lb_arr
    cdef double[::1] cub = col_ub_arr
    cdef long long[::1] basis = basis_arr
    cdef double[::1] xB = xB_arr
    cdef signed char[::1] varstat = varstat_arr

    for j in range(n):
        clb[j] = lb_arr[j]
        cub[j] = ub_arr[j]

    # pass 2: build the tableau with the initial (slack or artificial) basis
    cdef Py_ssize_t slack_at = n
    cdef Py_ssize_t next_art = art_start
    cdef Py_ssize_t a
    for i in range(m):
        r = resid[i]
        sense = sense_arr[i]
        if sense == 0:
            if r >= 0.0:
                for j in range(n):
                    T[i, j] = A_arr[i, j]
                T[i, slack_at] = 1.0
                basis[i] = slack_at
                xB[i] = r
            else:
                for j in range(n):
                    T[i, j] = -A_arr[i, j]
                T[i, slack_at] = -1.0
                T[i, next_art] = 1.0
                basis[i] = next_art
                next_art += 1
                xB[i] = -r
            slack_at += 1
        elif sense == 2:
            if r <= 0.0:
                for j in range(n):
                    T[i, j] = -A_arr[i, j]
                T[i, slack_at] = 1.0
                basis[i] = slack_at
                xB[i] = -r
            else:
                for j in range(n):
                    T[i, j] = A_arr[i, j]
                T[i, slack_at] = -1.0
                T[i, next_art] = 1.0
                basis[i] = next_art
                next_art += 1
                xB[i] = r
            slack_at += 1
        else:
            if r >= 0.0:
                for j in range(n):
                    T[i, j] = A_arr[i, j]
                xB[i] = r
            else:
                for j in range(n):
                    T[i, j] = -A_arr[i, j]
                xB[i] = -r
            T[i, next_art] = 1.0
            basis[i] = next_art
            next_art += 1

    for i in range(m):
        varstat[basis[i]] = 2

    cdef double bscale = 1.0
    for i in range(m):
        if abs(b_arr[i]) > bscale:
            bscale = abs(b_arr[i])
    cdef double feas_tol = 1e-7 * bscale

    cdef long long iter_cap = max_iter if max_iter > 0 else 2000 + 50 * (m + ncols)

    cdef cnp.ndarray[double, ndim=1] objrow_arr = np.zeros(ncols)
    cdef double[::1] objrow = objrow_arr
    cdef int status
    cdef double infeas, cb, piv, f, enter_val
    cdef Py_ssize_t piv_col

    if n_art > 0:
        for j in range(art_start, ncols):
            objrow[j] = 1.0
        for i in range(m):
            if basis[i] >= art_start:
                for j in range(ncols):
                    objrow[j] = objrow[j] - T[i, j]
        status = _iterate(T, objrow, basis, xB, varstat, clb, cub, art_start, 1.0, iter_cap)
        if status == STALLED:
            return STALLED, np.zeros(n), 0.0
        infeas = 0.0
        for i in range(m):
            if basis[i] >= art_start:
                infeas += xB[i]
        if infeas > feas_tol:
            return INFEASIBLE, np.zeros(n), 0.0
        for i in range(m):
            if basis[i] < art_start:
                continue
            piv_col = -1
            for j in range(art_start):
                if varstat[j] != 2 and abs(T[i, j]) > _PIV_TOL:
                    piv_col = j
                    break
            if piv_col < 0:
                xB[i] = 0.0
                continue
            enter_val = clb[piv_col] if varstat[piv_col] == 0 else cub[piv_col]
            piv = T[i, piv_col]
            for j in range(ncols):
                T[i, j] = T[i, j] / piv
            for a in range(m):
                if a != i:
                    f = T[a, piv_col]
                    if f != 0.0:
                        for j in range(ncols):
                            T[a, j] = T[a, j] - f * T[i, j]
            varstat[basis[i]] = 0
            varstat[piv_col] = 2
            basis[i] = piv_col
            xB[i] = enter_val

    cdef double cost_scale = 1.0
    for j in range(n):
        if abs(cost[j]) > cost_scale:
            cost_scale = abs(cost[j])
    for j in range(ncols):
        objrow[j] = 0.0
    for j in range(n):
        objrow[j] = cost[j]
    for i in range(m):
        if basis[i] < n:
            cb = cost[basis[i]]
            if cb != 0.0:
                for j in range(ncols):
                    objrow[j] = objrow[j] - cb * T[i, j]

    status = _iterate(T, objrow, basis, xB, varstat, clb, cub, art_start, cost_scale, iter_cap)
    if status != OPTIMAL:
        return status, np.zeros(n), 0.0

    cdef cnp.ndarray[double, ndim=1] x = np.empty(n)
    for j in range(n):
        if varstat[j] == 0:
            x[j] = lb_arr[j]
        elif varstat[j] == 1:
            x[j] = ub_arr[j]
        else:
            x[j] = 0.0
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = xB[i]
    cdef double obj = 0.0
    for j in range(n):
        obj += c_arr[j] * x[j]
    return OPTIMAL, x, obj
