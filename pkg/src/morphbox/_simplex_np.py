"""Plain-numpy simplex pivot kernel (fallback backend).

Implements the same method as _simplex_nb with identical pivoting rules:
two-phase primal simplex under Bland's smallest-index rule.  Rather than a
full tableau, the basis is tracked through the inverse of the small block
A[T, S], where T are the rows whose slack left the basis ("tight" rows) and
S the structural columns that entered.  All four pivot outcomes (enter
structural or slack, leave structural or slack) are rank-1 updates of that
inverse, so a pivot costs O(k^2 + R*k) instead of O(R * V).

Variable ids for Bland comparisons: structural columns keep their column
index (0..ncols-1, artificial included), the slack of row r gets id
ncols + r.
"""

import numpy as np

from morphbox.lp import (
    CODE_INFEASIBLE,
    CODE_NUMERICAL,
    CODE_OPTIMAL,
    CODE_PIVOT_LIMIT,
    CODE_UNBOUNDED,
)

_REFACTOR_EVERY = 128
_PIV_TOL = 1e-8


def solve_kernel_np(A, b2, c_real, c_phase1, art_id, feas_tol, max_pivots):
    """Returns (code, pivots, u) with u the standard-form solution (or None)."""
    R, ncols = A.shape
    bscale = 1.0 + (float(np.max(np.abs(b2))) if R else 0.0)
    cap = min(R, ncols) + 1
    row_state = np.zeros(R, dtype=np.uint8)  # 0 slack basic (W), 1 tight (T)
    tpos = np.full(R, -1, dtype=np.int64)
    spos = np.full(ncols, -1, dtype=np.int64)
    T_rows = np.zeros(cap, dtype=np.int64)
    S_cols = np.zeros(cap, dtype=np.int64)
    M = np.zeros((cap, cap))          # inverse of A[T_rows[:k], S_cols[:k]]
    AS = np.zeros((R, cap))           # dense copy of the S columns
    xS = np.zeros(cap)                # values of the structural basics
    slack_val = b2.copy()             # meaningful on W rows only
    row_ids = np.arange(R, dtype=np.int64)
    k = 0
    phase = 2

    if art_id >= 0:
        # Phase 1 with a single artificial column: make it basic against the
        # most negative row, which renders every slack value nonnegative.
        r0 = int(np.argmin(b2))
        T_rows[0] = r0
        S_cols[0] = art_id
        M[0, 0] = -1.0
        AS[:, 0] = A[:, art_id]
        xS[0] = -b2[r0]
        row_state[r0] = 1
        tpos[r0] = 0
        spos[art_id] = 0
        slack_val = b2 - AS[:, 0] * xS[0]
        slack_val[r0] = 0.0
        k = 1
        phase = 1

    dtol1 = 2e-9
    dtol2 = 1e-9 * (1.0 + float(np.max(np.abs(c_real))))
    pivots = 0
    since_refactor = 0

    def refactor():
        nonlocal since_refactor
        since_refactor = 0
        if k == 0:
            slack_val[:] = b2
            return True
        B = AS[T_rows[:k], :k]
        try:
            M[:k, :k] = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        xS[:k] = M[:k, :k] @ b2[T_rows[:k]]
        sv = b2 - AS[:, :k] @ xS[:k]
        sv[T_rows[:k]] = 0.0
        slack_val[:] = sv
        return True

    def price(cost, dtol, yT):
        """Bland pricing: smallest-id candidate, structural ids first."""
        y_full = np.zeros(R)
        y_full[T_rows[:k]] = yT
        d = cost - y_full @ A
        d[spos >= 0] = 1.0
        if phase == 2 and art_id >= 0:
            d[art_id] = 1.0
        cand = np.flatnonzero(d < -dtol)
        if cand.size:
            return int(cand[0]), -1
        elig = np.flatnonzero((row_state == 1) & (-y_full < -dtol))
        if elig.size:
            return -1, int(elig[0])
        return -1, -1

    def drive_out_artificial():
        """Replace a basic, value-zero artificial by any independent column."""
        nonlocal k
        p = int(spos[art_id])
        Mp = M[p, :k].copy()
        wp_all = Mp @ A[T_rows[:k], :]
        for j in range(ncols):
            if spos[j] >= 0 or j == art_id:
                continue
            piv = wp_all[j]
            if abs(piv) > 1e-7:
                colq = A[:, j]
                dS = M[:k, :k] @ colq[T_rows[:k]]
                spos[art_id] = -1
                Mp2 = M[p, :k] / piv
                M[:k, :k] -= np.outer(dS, Mp2)
                M[p, :k] = Mp2
                S_cols[p] = j
                spos[j] = p
                AS[:, p] = colq
                xS[p] = 0.0
                return True
        for r2 in range(R):
            if row_state[r2] != 1:
                continue
            rho = int(tpos[r2])
            piv = M[p, rho]
            if abs(piv) > 1e-7:
                spos[art_id] = -1
                row_state[r2] = 0
                slack_val[r2] = 0.0
                tpos[r2] = -1
                colv = M[:k, rho].copy()
                roww = M[p, :k].copy()
                M[:k, :k] -= np.outer(colv, roww) / piv
                last = k - 1
                if p != last:
                    M[p, :k] = M[last, :k]
                    xS[p] = xS[last]
                    S_cols[p] = S_cols[last]
                    spos[S_cols[p]] = p
                    AS[:, p] = AS[:, last]
                if rho != last:
                    M[:last, rho] = M[:last, last]
                    T_rows[rho] = T_rows[last]
                    tpos[T_rows[rho]] = rho
                k = last
                return True
        return False

    while True:
        if since_refactor >= _REFACTOR_EVERY:
            if not refactor():
                return CODE_NUMERICAL, pivots, None
        cost = c_phase1 if phase == 1 else c_real
        dtol = dtol1 if phase == 1 else dtol2
        yT = cost[S_cols[:k]] @ M[:k, :k]
        q, enter_row = price(cost, dtol, yT)

        if q < 0 and enter_row < 0:
            if phase == 1:
                apos = int(spos[art_id])
                aval = float(xS[apos]) if apos >= 0 else 0.0
                if aval > feas_tol * bscale:
                    return CODE_INFEASIBLE, pivots, None
                if apos >= 0 and not drive_out_artificial():
                    return CODE_NUMERICAL, pivots, None
                phase = 2
                continue
            if not refactor():
                return CODE_NUMERICAL, pivots, None
            worst = 0.0
            if k:
                worst = min(worst, float(xS[:k].min()))
            if R:
                worst = min(worst, float(slack_val[row_state == 0].min()) if (row_state == 0).any() else 0.0)
            if worst < -feas_tol * bscale:
                return CODE_NUMERICAL, pivots, None
            u = np.zeros(ncols)
            u[S_cols[:k]] = np.maximum(xS[:k], 0.0)
            return CODE_OPTIMAL, pivots, u

        if pivots >= max_pivots:
            return CODE_PIVOT_LIMIT, pivots, None

        if q >= 0:
            colq = A[:, q]
            dS = M[:k, :k] @ colq[T_rows[:k]]
            delta = colq - AS[:, :k] @ dS
        else:
            rho_in = int(tpos[enter_row])
            dS = M[:k, rho_in].copy()
            delta = -(AS[:, :k] @ dS)

        candS = dS > _PIV_TOL
        candW = (row_state == 0) & (delta > _PIV_TOL)
        ratS = np.where(candS, np.maximum(xS[:k], 0.0) / np.where(candS, dS, 1.0), np.inf)
        ratW = np.where(candW, np.maximum(slack_val, 0.0) / np.where(candW, delta, 1.0), np.inf)
        theta = np.inf
        if k:
            theta = min(theta, float(ratS.min()))
        if R:
            theta = min(theta, float(ratW.min()))
        if not np.isfinite(theta):
            return (CODE_UNBOUNDED if phase == 2 else CODE_NUMERICAL), pivots, None

        limit = theta * (1.0 + 1e-9) + 1e-12 * bscale
        leave_id = np.iinfo(np.int64).max
        if k:
            ids = S_cols[:k][ratS <= limit]
            if ids.size:
                leave_id = int(ids.min())
        if R:
            ids = row_ids[ratW <= limit]
            if ids.size:
                leave_id = min(leave_id, int(ids.min()) + ncols)

        # Move along the edge, then patch tiny negative values from rounding.
        if k:
            xS[:k] -= theta * dS
            v = xS[:k]
            v[(v < 0.0) & (v > -feas_tol * bscale)] = 0.0
        wmask = row_state == 0
        slack_val[wmask] -= theta * delta[wmask]
        tiny = (slack_val < 0.0) & (slack_val > -feas_tol * bscale)
        slack_val[tiny] = 0.0

        if leave_id < ncols:
            p = int(spos[leave_id])
            if q >= 0:
                # (a) structural in, structural out: column replacement.
                piv = dS[p]
                spos[leave_id] = -1
                Mp = M[p, :k] / piv
                M[:k, :k] -= np.outer(dS, Mp)
                M[p, :k] = Mp
                S_cols[p] = q
                spos[q] = p
                AS[:, p] = colq
                xS[p] = theta
            else:
                # (b) slack in, structural out: the basis block shrinks.
                piv = M[p, rho_in]
                spos[leave_id] = -1
                row_state[enter_row] = 0
                slack_val[enter_row] = theta
                tpos[enter_row] = -1
                colv = M[:k, rho_in].copy()
                roww = M[p, :k].copy()
                M[:k, :k] -= np.outer(colv, roww) / piv
                last = k - 1
                if p != last:
                    M[p, :k] = M[last, :k]
                    xS[p] = xS[last]
                    S_cols[p] = S_cols[last]
                    spos[S_cols[p]] = p
                    AS[:, p] = AS[:, last]
                if rho_in != last:
                    M[:last, rho_in] = M[:last, last]
                    T_rows[rho_in] = T_rows[last]
                    tpos[T_rows[rho_in]] = rho_in
                k = last
        else:
            r = leave_id - ncols
            if q >= 0:
                # (c) structural in, slack out: the basis block grows.
                z = AS[r, :k] @ M[:k, :k]
                s = delta[r]
                M[:k, :k] += np.outer(dS, z) / s
                M[:k, k] = -dS / s
                M[k, :k] = -z / s
                M[k, k] = 1.0 / s
                T_rows[k] = r
                tpos[r] = k
                row_state[r] = 1
                slack_val[r] = 0.0
                S_cols[k] = q
                spos[q] = k
                AS[:, k] = colq
                xS[k] = theta
                k += 1
            else:
                # (d) slack in, slack out: one tight row replaces another.
                z = AS[r, :k] @ M[:k, :k]
                zr = z[rho_in]
                colv = M[:k, rho_in].copy()
                z[rho_in] -= 1.0
                M[:k, :k] -= np.outer(colv, z) / zr
                T_rows[rho_in] = r
                tpos[r] = rho_in
                tpos[enter_row] = -1
                row_state[enter_row] = 0
                slack_val[enter_row] = theta
                row_state[r] = 1
                slack_val[r] = 0.0

        pivots += 1
        since_refactor += 1
        if phase == 1 and spos[art_id] < 0:
            phase = 2
