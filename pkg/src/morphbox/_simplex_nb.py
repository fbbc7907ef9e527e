"""Numba-compiled simplex pivot kernel (default backend).

Loop-for-loop port of _simplex_np: identical two-phase method, Bland rule,
and compact basis-inverse bookkeeping.  The constraint matrix arrives in both
column-compressed (Ap/Ai/Ax) and row-compressed (Bp/Bj/Bx) form; pricing and
direction builds walk only stored nonzeros, which is what makes the big
training subproblems cheap (2-3 nonzeros per row).
"""

import numpy as np
from numba import njit

from morphbox.lp import (
    CODE_INFEASIBLE,
    CODE_NUMERICAL,
    CODE_OPTIMAL,
    CODE_PIVOT_LIMIT,
    CODE_UNBOUNDED,
)

_REFACTOR_EVERY = 128
_PIV_TOL = 1e-8


@njit(cache=True, nogil=True, fastmath={'reassoc', 'contract', 'nsz'})
def _refactor(k, Ap, Ai, Ax, b2, row_state, tpos, T_rows, S_cols, M, xS, slack_val, R):
    if k == 0:
        for r in range(R):
            slack_val[r] = b2[r]
        return
    B = np.zeros((k, k))
    for s in range(k):
        j = S_cols[s]
        for e in range(Ap[j], Ap[j + 1]):
            r = Ai[e]
            if row_state[r] == 1:
                B[tpos[r], s] = Ax[e]
    Minv = np.linalg.inv(B)
    for s in range(k):
        for t in range(k):
            M[s, t] = Minv[s, t]
    for s in range(k):
        acc = 0.0
        for t in range(k):
            acc += M[s, t] * b2[T_rows[t]]
        xS[s] = acc
    for r in range(R):
        slack_val[r] = b2[r]
    for s in range(k):
        v = xS[s]
        if v != 0.0:
            j = S_cols[s]
            for e in range(Ap[j], Ap[j + 1]):
                r = Ai[e]
                if row_state[r] == 0:
                    slack_val[r] -= Ax[e] * v
    for t in range(k):
        slack_val[T_rows[t]] = 0.0


@njit(cache=True, nogil=True, fastmath={'reassoc', 'contract', 'nsz'})
def solve_kernel_nb(Ap, Ai, Ax, Bp, Bj, Bx, R, ncols, b2, c_real, c_phase1,
                    art_id, feas_tol, max_pivots):
    bscale = 1.0
    for r in range(R):
        a = abs(b2[r])
        if a > bscale - 1.0:
            bscale = 1.0 + a
    cmax = 0.0
    for j in range(ncols):
        a = abs(c_real[j])
        if a > cmax:
            cmax = a
    dtol1 = 2e-9
    dtol2 = 1e-9 * (1.0 + cmax)

    cap = min(R, ncols) + 1
    row_state = np.zeros(R, dtype=np.uint8)
    tpos = np.full(R, -1, dtype=np.int64)
    spos = np.full(ncols, -1, dtype=np.int64)
    T_rows = np.zeros(cap, dtype=np.int64)
    S_cols = np.zeros(cap, dtype=np.int64)
    M = np.zeros((cap, cap))
    xS = np.zeros(cap)
    slack_val = b2.copy()
    yT = np.zeros(cap)
    wT = np.zeros(cap)
    dS = np.zeros(cap)
    zrow = np.zeros(cap)
    arowS = np.zeros(cap)
    tmpv = np.zeros(cap)
    tmpw = np.zeros(cap)
    acc = np.zeros(R)
    touched = np.zeros(R, dtype=np.int64)
    in_touched = np.zeros(R, dtype=np.uint8)
    u = np.zeros(ncols)

    k = 0
    phase = 2
    if art_id >= 0:
        r0 = 0
        bmin = b2[0]
        for r in range(1, R):
            if b2[r] < bmin:
                bmin = b2[r]
                r0 = r
        T_rows[0] = r0
        S_cols[0] = art_id
        M[0, 0] = -1.0
        xS[0] = -b2[r0]
        row_state[r0] = 1
        tpos[r0] = 0
        spos[art_id] = 0
        for e in range(Ap[art_id], Ap[art_id + 1]):
            r = Ai[e]
            slack_val[r] = b2[r] - Ax[e] * xS[0]
        slack_val[r0] = 0.0
        k = 1
        phase = 1

    pivots = 0
    since_refactor = 0

    while True:
        if since_refactor >= _REFACTOR_EVERY:
            _refactor(k, Ap, Ai, Ax, b2, row_state, tpos, T_rows, S_cols, M, xS, slack_val, R)
            since_refactor = 0

        if phase == 1:
            cost = c_phase1
            dtol = dtol1
        else:
            cost = c_real
            dtol = dtol2

        # Duals on the tight rows, accumulated row-by-row of M so the inner
        # loop runs stride-1 (the column-ordered form defeats vectorization).
        for t in range(k):
            yT[t] = 0.0
        for s in range(k):
            f = cost[S_cols[s]]
            if f != 0.0:
                for t in range(k):
                    yT[t] += f * M[s, t]

        # Bland pricing: structural columns by index, then slacks by row.
        q = -1
        for j in range(ncols):
            if spos[j] >= 0:
                continue
            if phase == 2 and j == art_id:
                continue
            d = cost[j]
            for e in range(Ap[j], Ap[j + 1]):
                r = Ai[e]
                if row_state[r] == 1:
                    d -= yT[tpos[r]] * Ax[e]
            if d < -dtol:
                q = j
                break
        enter_row = -1
        if q < 0:
            for r in range(R):
                if row_state[r] == 1 and -yT[tpos[r]] < -dtol:
                    enter_row = r
                    break

        if q < 0 and enter_row < 0:
            if phase == 1:
                apos = spos[art_id]
                aval = 0.0
                if apos >= 0:
                    aval = xS[apos]
                if aval > feas_tol * bscale:
                    return CODE_INFEASIBLE, pivots, u
                if apos >= 0:
                    # Drive the value-zero artificial out of the basis.
                    p = apos
                    done = False
                    for j in range(ncols):
                        if spos[j] >= 0 or j == art_id:
                            continue
                        piv = 0.0
                        for e in range(Ap[j], Ap[j + 1]):
                            r = Ai[e]
                            if row_state[r] == 1:
                                piv += M[p, tpos[r]] * Ax[e]
                        if abs(piv) > 1e-7:
                            for t in range(k):
                                wT[t] = 0.0
                            for e in range(Ap[j], Ap[j + 1]):
                                r = Ai[e]
                                if row_state[r] == 1:
                                    wT[tpos[r]] = Ax[e]
                            for s in range(k):
                                s_acc = 0.0
                                for t in range(k):
                                    s_acc += M[s, t] * wT[t]
                                dS[s] = s_acc
                            spos[art_id] = -1
                            for t in range(k):
                                tmpw[t] = M[p, t] / piv
                            for s in range(k):
                                f = dS[s]
                                for t in range(k):
                                    M[s, t] -= f * tmpw[t]
                            for t in range(k):
                                M[p, t] = tmpw[t]
                            S_cols[p] = j
                            spos[j] = p
                            xS[p] = 0.0
                            done = True
                            break
                    if not done:
                        for r2 in range(R):
                            if row_state[r2] != 1:
                                continue
                            rho = tpos[r2]
                            piv = M[p, rho]
                            if abs(piv) > 1e-7:
                                spos[art_id] = -1
                                row_state[r2] = 0
                                slack_val[r2] = 0.0
                                tpos[r2] = -1
                                for s in range(k):
                                    tmpv[s] = M[s, rho]
                                for t in range(k):
                                    tmpw[t] = M[p, t]
                                inv_piv = 1.0 / piv
                                for s in range(k):
                                    f = tmpv[s] * inv_piv
                                    for t in range(k):
                                        M[s, t] -= f * tmpw[t]
                                last = k - 1
                                if p != last:
                                    for t in range(k):
                                        M[p, t] = M[last, t]
                                    xS[p] = xS[last]
                                    S_cols[p] = S_cols[last]
                                    spos[S_cols[p]] = p
                                if rho != last:
                                    for s in range(last):
                                        M[s, rho] = M[s, last]
                                    T_rows[rho] = T_rows[last]
                                    tpos[T_rows[rho]] = rho
                                k = last
                                done = True
                                break
                    if not done:
                        return CODE_NUMERICAL, pivots, u
                phase = 2
                continue
            _refactor(k, Ap, Ai, Ax, b2, row_state, tpos, T_rows, S_cols, M, xS, slack_val, R)
            since_refactor = 0
            worst = 0.0
            for s in range(k):
                if xS[s] < worst:
                    worst = xS[s]
            for r in range(R):
                if row_state[r] == 0 and slack_val[r] < worst:
                    worst = slack_val[r]
            if worst < -feas_tol * bscale:
                return CODE_NUMERICAL, pivots, u
            for s in range(k):
                v = xS[s]
                if v < 0.0:
                    v = 0.0
                u[S_cols[s]] = v
            return CODE_OPTIMAL, pivots, u

        if pivots >= max_pivots:
            return CODE_PIVOT_LIMIT, pivots, u

        # Direction of change of the basic values when the entrant increases.
        ntouched = 0
        if q >= 0:
            for t in range(k):
                wT[t] = 0.0
            for e in range(Ap[q], Ap[q + 1]):
                r = Ai[e]
                if row_state[r] == 1:
                    wT[tpos[r]] = Ax[e]
                elif in_touched[r] == 0:
                    in_touched[r] = 1
                    touched[ntouched] = r
                    ntouched += 1
                    acc[r] = Ax[e]
                else:
                    acc[r] += Ax[e]
            for s in range(k):
                s_acc = 0.0
                for t in range(k):
                    s_acc += M[s, t] * wT[t]
                dS[s] = s_acc
            rho_in = -1
        else:
            rho_in = tpos[enter_row]
            for s in range(k):
                dS[s] = M[s, rho_in]
        for s in range(k):
            ds = dS[s]
            if ds != 0.0:
                j = S_cols[s]
                for e in range(Ap[j], Ap[j + 1]):
                    r = Ai[e]
                    if row_state[r] == 0:
                        if in_touched[r] == 0:
                            in_touched[r] = 1
                            touched[ntouched] = r
                            ntouched += 1
                            acc[r] = -ds * Ax[e]
                        else:
                            acc[r] -= ds * Ax[e]

        # Ratio test.
        theta = np.inf
        for s in range(k):
            if dS[s] > _PIV_TOL:
                num = xS[s]
                if num < 0.0:
                    num = 0.0
                rat = num / dS[s]
                if rat < theta:
                    theta = rat
        for ti in range(ntouched):
            r = touched[ti]
            if acc[r] > _PIV_TOL:
                num = slack_val[r]
                if num < 0.0:
                    num = 0.0
                rat = num / acc[r]
                if rat < theta:
                    theta = rat
        if not np.isfinite(theta):
            for ti in range(ntouched):
                in_touched[touched[ti]] = 0
            if phase == 2:
                return CODE_UNBOUNDED, pivots, u
            return CODE_NUMERICAL, pivots, u

        limit = theta * (1.0 + 1e-9) + 1e-12 * bscale
        # Bland leaving choice: smallest variable id among the tied candidates;
        # structural ids (< ncols) always beat slack ids (ncols + r).
        leave_s = -1
        best_id = np.int64(9223372036854775807)
        for s in range(k):
            if dS[s] > _PIV_TOL:
                num = xS[s]
                if num < 0.0:
                    num = 0.0
                if num / dS[s] <= limit and S_cols[s] < best_id:
                    best_id = S_cols[s]
                    leave_s = s
        leave_r = -1
        if leave_s < 0:
            for ti in range(ntouched):
                r = touched[ti]
                if acc[r] > _PIV_TOL:
                    num = slack_val[r]
                    if num < 0.0:
                        num = 0.0
                    if num / acc[r] <= limit and ncols + r < best_id:
                        best_id = ncols + r
                        leave_r = r

        # Step the basic values, clearing rounding dust.
        if theta != 0.0:
            for s in range(k):
                v = xS[s] - theta * dS[s]
                if v < 0.0 and v > -feas_tol * bscale:
                    v = 0.0
                xS[s] = v
            for ti in range(ntouched):
                r = touched[ti]
                v = slack_val[r] - theta * acc[r]
                if v < 0.0 and v > -feas_tol * bscale:
                    v = 0.0
                slack_val[r] = v

        if leave_s >= 0:
            p = leave_s
            if q >= 0:
                # (a) structural in, structural out: column replacement.
                piv = dS[p]
                spos[S_cols[p]] = -1
                for t in range(k):
                    tmpw[t] = M[p, t] / piv
                for s in range(k):
                    f = dS[s]
                    for t in range(k):
                        M[s, t] -= f * tmpw[t]
                for t in range(k):
                    M[p, t] = tmpw[t]
                S_cols[p] = q
                spos[q] = p
                xS[p] = theta
            else:
                # (b) slack in, structural out: basis block shrinks.
                piv = M[p, rho_in]
                spos[S_cols[p]] = -1
                row_state[enter_row] = 0
                slack_val[enter_row] = theta
                tpos[enter_row] = -1
                for s in range(k):
                    tmpv[s] = M[s, rho_in]
                for t in range(k):
                    tmpw[t] = M[p, t]
                inv_piv = 1.0 / piv
                for s in range(k):
                    f = tmpv[s] * inv_piv
                    for t in range(k):
                        M[s, t] -= f * tmpw[t]
                last = k - 1
                if p != last:
                    for t in range(k):
                        M[p, t] = M[last, t]
                    xS[p] = xS[last]
                    S_cols[p] = S_cols[last]
                    spos[S_cols[p]] = p
                if rho_in != last:
                    for s in range(last):
                        M[s, rho_in] = M[s, last]
                    T_rows[rho_in] = T_rows[last]
                    tpos[T_rows[rho_in]] = rho_in
                k = last
        else:
            r = leave_r
            # Row r of A restricted to the current S columns.
            for s in range(k):
                arowS[s] = 0.0
            for e in range(Bp[r], Bp[r + 1]):
                sp = spos[Bj[e]]
                if sp >= 0:
                    arowS[sp] = Bx[e]
            for t in range(k):
                s_acc = 0.0
                for s in range(k):
                    s_acc += arowS[s] * M[s, t]
                zrow[t] = s_acc
            if q >= 0:
                # (c) structural in, slack out: basis block grows.
                sval = acc[r]
                inv_s = 1.0 / sval
                for s in range(k):
                    f = dS[s] * inv_s
                    for t in range(k):
                        M[s, t] += f * zrow[t]
                for s in range(k):
                    M[s, k] = -dS[s] * inv_s
                for t in range(k):
                    M[k, t] = -zrow[t] * inv_s
                M[k, k] = inv_s
                T_rows[k] = r
                tpos[r] = k
                row_state[r] = 1
                slack_val[r] = 0.0
                S_cols[k] = q
                spos[q] = k
                xS[k] = theta
                k += 1
            else:
                # (d) slack in, slack out: one tight row replaces another.
                zr = zrow[rho_in]
                for s in range(k):
                    tmpv[s] = M[s, rho_in]
                zrow[rho_in] -= 1.0
                inv_zr = 1.0 / zr
                for s in range(k):
                    f = tmpv[s] * inv_zr
                    for t in range(k):
                        M[s, t] -= f * zrow[t]
                T_rows[rho_in] = r
                tpos[r] = rho_in
                tpos[enter_row] = -1
                row_state[enter_row] = 0
                slack_val[enter_row] = theta
                row_state[r] = 1
                slack_val[r] = 0.0

        for ti in range(ntouched):
            in_touched[touched[ti]] = 0
        pivots += 1
        since_refactor += 1
        if phase == 1 and spos[art_id] < 0:
            phase = 2
