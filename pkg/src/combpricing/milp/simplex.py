"""Dense bounded-variable simplex.

Every row ``a.x (<=, ==, >=) b`` receives a slack column whose bounds encode
the sense, so the working problem is always::

    max c.z   s.t.  [A I] z = b,   lb <= z <= ub

The tableau ``B^-1 [A I]`` is kept explicitly.  Primal simplex (with a
composite phase 1 on the sum of infeasibilities) solves from scratch; dual
simplex re-optimizes after bound changes and appended rows, which is the
common case inside branch and bound.
"""

from __future__ import annotations

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-9
_BLAND_AFTER = 50


class LpStalled(RuntimeError):
    """Raised when the iteration cap is reached."""


class DenseSimplex:
    def __init__(self, A, senses, b, c, lb, ub, *, ptol=1e-7, dtol=1e-7,
                 max_iter=20000, refactor_every=100):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        m = len(b)
        if A.size == 0:
            A = np.zeros((m, len(c)))
        n = A.shape[1]
        self.n = n
        self.m = m
        self.ptol = ptol
        self.dtol = dtol
        self.max_iter = max_iter
        self.refactor_every = refactor_every
        self.iterations = 0

        self._A = np.hstack([A, np.eye(m)])
        self.b = np.asarray(b, dtype=float).copy()
        self.c = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])
        slb, sub = _slack_bounds(senses)
        self.lb = np.concatenate([np.asarray(lb, dtype=float), slb])
        self.ub = np.concatenate([np.asarray(ub, dtype=float), sub])

        self.var_cols = np.arange(n)
        self.row_slack = np.arange(n, n + m)
        self.basis = np.arange(n, n + m)
        self.is_basic = np.zeros(n + m, dtype=bool)
        self.is_basic[self.basis] = True
        self.x = np.zeros(n + m)
        self._place_nonbasic()
        self._refactor()

    # ------------------------------------------------------------------
    # state management

    @property
    def num_cols(self):
        return self._A.shape[1]

    def _place_nonbasic(self, prefer_upper=None):
        nb = ~self.is_basic
        lb, ub = self.lb, self.ub
        val = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
        if prefer_upper is not None:
            up = prefer_upper & np.isfinite(ub)
            val = np.where(up, ub, val)
        self.x[nb] = val[nb]

    def _refactor(self):
        B = self._A[:, self.basis]
        Binv = np.linalg.inv(B)
        self.T = Binv @ self._A
        nb = ~self.is_basic
        rhs = self.b - self._A[:, nb] @ self.x[nb]
        self.x[self.basis] = Binv @ rhs
        self.d = self.c - self.c[self.basis] @ self.T
        self.d[self.basis] = 0.0
        self._since_refactor = 0

    def _pivot(self, r, q):
        row = self.T[r] / self.T[r, q]
        col = self.T[:, q].copy()
        col[r] = 0.0
        self.T -= np.outer(col, row)
        self.T[r] = row
        self.d -= self.d[q] * row
        self.d[q] = 0.0
        leaving = self.basis[r]
        self.basis[r] = q
        self.is_basic[leaving] = False
        self.is_basic[q] = True
        self._since_refactor += 1
        self.iterations += 1
        if self._since_refactor >= self.refactor_every:
            self._refactor()

    def objective(self):
        return float(self.c @ self.x)

    def values(self):
        return self.x[self.var_cols].copy()

    def get_basis(self):
        at_upper = (~self.is_basic) & (self.x >= self.ub) & np.isfinite(self.ub) & (self.ub > self.lb)
        return self.basis.copy(), at_upper

    def set_basis(self, basis, at_upper):
        """Install a saved basis; rows appended since it was saved keep their slacks basic."""
        full = np.concatenate([basis, self.row_slack[len(basis):]]).astype(int)
        flags = np.zeros(self.num_cols, dtype=bool)
        flags[: len(at_upper)] = at_upper
        old = (self.basis.copy(), self.is_basic.copy(), self.x.copy())
        self.basis = full
        self.is_basic[:] = False
        self.is_basic[self.basis] = True
        self._place_nonbasic(prefer_upper=flags)
        try:
            self._refactor()
        except np.linalg.LinAlgError:
            self.basis, self.is_basic, self.x = old
            self._refactor()

    def set_bounds(self, idx, lb, ub):
        """Change structural bounds in place, keeping the tableau."""
        idx = self.var_cols[np.asarray(idx, dtype=int)]
        self.lb[idx] = lb
        self.ub[idx] = ub
        nb = idx[~self.is_basic[idx]]
        for j in nb:
            old = self.x[j]
            new = min(max(old, self.lb[j]), self.ub[j])
            if new != old:
                self.x[j] = new
                self.x[self.basis] -= self.T[:, j] * (new - old)

    def add_rows(self, rows, senses, rhs):
        """Append rows ``rows @ x (sense) rhs``; each new slack enters the basis."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        k = rows.shape[0]
        if k == 0:
            return
        m, nc = self.m, self.num_cols
        slb, sub = _slack_bounds(senses)
        full_rows = np.zeros((k, nc + k))
        full_rows[:, self.var_cols] = rows
        full_rows[:, nc:] = np.eye(k)
        self._A = np.vstack([np.hstack([self._A, np.zeros((m, k))]), full_rows])
        self.b = np.concatenate([self.b, np.asarray(rhs, dtype=float)])
        self.c = np.concatenate([self.c, np.zeros(k)])
        self.lb = np.concatenate([self.lb, slb])
        self.ub = np.concatenate([self.ub, sub])
        self.x = np.concatenate([self.x, np.zeros(k)])
        self.is_basic = np.concatenate([self.is_basic, np.ones(k, dtype=bool)])
        self.d = np.concatenate([self.d, np.zeros(k)])
        new_slacks = np.arange(nc, nc + k)
        # express the new rows in terms of the current nonbasic variables
        T = np.hstack([self.T, np.zeros((m, k))])
        new_T = full_rows - full_rows[:, self.basis] @ T
        self.T = np.vstack([T, new_T])
        self.basis = np.concatenate([self.basis, new_slacks])
        self.row_slack = np.concatenate([self.row_slack, new_slacks])
        self.m = m + k
        self.x[new_slacks] = self.b[m:] - rows @ self.x[self.var_cols]

    def add_columns(self, cols, lb, ub, c):
        """Append structural variables with column ``cols[:, j]`` over the current rows."""
        cols = np.asarray(cols, dtype=float).reshape(self.m, -1)
        k = cols.shape[1]
        if k == 0:
            return
        nc = self.num_cols
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        c = np.asarray(c, dtype=float)
        self._A = np.hstack([self._A, cols])
        Tnew = self.T[:, self.row_slack] @ cols
        self.T = np.hstack([self.T, Tnew])
        self.c = np.concatenate([self.c, c])
        self.lb = np.concatenate([self.lb, lb])
        self.ub = np.concatenate([self.ub, ub])
        self.is_basic = np.concatenate([self.is_basic, np.zeros(k, dtype=bool)])
        val = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
        self.x = np.concatenate([self.x, val])
        self.x[self.basis] -= Tnew @ val
        self.d = np.concatenate([self.d, c - self.c[self.basis] @ Tnew])
        self.var_cols = np.concatenate([self.var_cols, np.arange(nc, nc + k)])
        self.n += k

    # ------------------------------------------------------------------
    # feasibility helpers

    def _infeasibility(self):
        xb = self.x[self.basis]
        low = self.lb[self.basis] - xb
        high = xb - self.ub[self.basis]
        return np.maximum(low, high)

    def primal_feasible(self):
        return bool(self.m == 0 or self._infeasibility().max() <= self.ptol)

    def _make_dual_feasible(self):
        """Flip boxed nonbasics to the bound their reduced cost prefers.

        Returns False when some nonbasic cannot be made dual feasible.
        """
        nb = ~self.is_basic
        d, x, lb, ub = self.d, self.x, self.lb, self.ub
        fixed = lb == ub
        at_lb = nb & ~fixed & (x <= lb)
        at_ub = nb & ~fixed & (x >= ub)
        free = nb & ~fixed & ~at_lb & ~at_ub
        ok = True
        if np.any(np.abs(d[free]) > self.dtol):
            ok = False
        bad_lb = np.flatnonzero(at_lb & (d > self.dtol))
        bad_ub = np.flatnonzero(at_ub & (d < -self.dtol))
        moved = False
        for j in bad_lb:
            if np.isfinite(ub[j]):
                self._move_nonbasic(j, ub[j])
                moved = True
            else:
                ok = False
        for j in bad_ub:
            if np.isfinite(lb[j]):
                self._move_nonbasic(j, lb[j])
                moved = True
            else:
                ok = False
        return ok

    def _move_nonbasic(self, j, value):
        delta = value - self.x[j]
        self.x[j] = value
        self.x[self.basis] -= self.T[:, j] * delta

    # ------------------------------------------------------------------
    # algorithms

    def solve(self):
        self._cap = self.iterations + self.max_iter
        for _ in range(4):
            if self._make_dual_feasible():
                status = self._dual()
                if status == INFEASIBLE:
                    return INFEASIBLE
            status = self._primal()
            if status != OPTIMAL:
                return status
            self._refactor()
            if self.primal_feasible() and self._dual_ok():
                return OPTIMAL
        return OPTIMAL

    def _dual_ok(self):
        nb = ~self.is_basic
        d, x, lb, ub = self.d, self.x, self.lb, self.ub
        can_inc = nb & (x < ub - 1e-12)
        can_dec = nb & (x > lb + 1e-12)
        return not (np.any(can_inc & (d > self.dtol)) or np.any(can_dec & (d < -self.dtol)))

    def _primal(self):
        degenerate = 0
        while True:
            if self.iterations > self._cap:
                raise LpStalled("simplex iteration cap reached")
            basis = self.basis
            xb = self.x[basis]
            lbB = self.lb[basis]
            ubB = self.ub[basis]
            below = xb < lbB - self.ptol
            above = xb > ubB + self.ptol
            phase1 = bool(below.any() or above.any())
            if phase1:
                cb = below.astype(float) - above.astype(float)
                d = -(cb @ self.T)
                d[basis] = 0.0
            else:
                d = self.d
            nb = ~self.is_basic
            can_inc = nb & (self.x < self.ub - 1e-12)
            can_dec = nb & (self.x > self.lb + 1e-12)
            up = can_inc & (d > self.dtol)
            down = can_dec & (d < -self.dtol)
            score = np.where(up | down, np.abs(d), 0.0)
            if not score.any():
                return INFEASIBLE if phase1 else OPTIMAL
            bland = degenerate >= _BLAND_AFTER
            q = int(np.flatnonzero(score)[0]) if bland else int(np.argmax(score))
            direction = 1.0 if up[q] else -1.0
            alpha = self.T[:, q] * direction

            # entering variable's own range
            span = self.ub[q] - self.lb[q]
            theta_best = span
            r = -1
            target = 0.0

            dec = alpha > _PIVOT_TOL
            inc = alpha < -_PIVOT_TOL
            ratios = np.full(len(basis), np.inf)
            relaxed = np.full(len(basis), np.inf)
            targets = np.zeros(len(basis))
            # basics moving down
            m1 = dec & ~below & np.isfinite(lbB)
            ratios[m1] = (xb[m1] - lbB[m1]) / alpha[m1]
            relaxed[m1] = (xb[m1] - lbB[m1] + self.ptol) / alpha[m1]
            targets[m1] = lbB[m1]
            m2 = dec & above
            ratios[m2] = (xb[m2] - ubB[m2]) / alpha[m2]
            relaxed[m2] = (xb[m2] - ubB[m2] + self.ptol) / alpha[m2]
            targets[m2] = ubB[m2]
            # basics moving up
            m3 = inc & ~above & np.isfinite(ubB)
            ratios[m3] = (ubB[m3] - xb[m3]) / -alpha[m3]
            relaxed[m3] = (ubB[m3] - xb[m3] + self.ptol) / -alpha[m3]
            targets[m3] = ubB[m3]
            m4 = inc & below
            ratios[m4] = (lbB[m4] - xb[m4]) / -alpha[m4]
            relaxed[m4] = (lbB[m4] - xb[m4] + self.ptol) / -alpha[m4]
            targets[m4] = lbB[m4]

            finite = np.isfinite(ratios)
            if finite.any():
                if bland:
                    tmin = ratios[finite].min()
                    cand = np.flatnonzero(finite & (ratios <= tmin + 1e-12))
                    r_pick = int(cand[np.argmin(basis[cand])])
                else:
                    tmax = relaxed[finite].min()
                    cand = np.flatnonzero(finite & (ratios <= tmax))
                    r_pick = int(cand[np.argmax(np.abs(alpha[cand]))])
                theta_row = max(ratios[r_pick], 0.0)
                if theta_row < theta_best:
                    theta_best = theta_row
                    r = r_pick
                    target = targets[r_pick]
            if not np.isfinite(theta_best):
                return UNBOUNDED

            degenerate = degenerate + 1 if theta_best <= 1e-12 else 0
            step = direction * theta_best
            self.x[basis] -= alpha * theta_best
            if r < 0:
                # bound flip of the entering variable
                self.x[q] = self.ub[q] if direction > 0 else self.lb[q]
                self.iterations += 1
                continue
            self.x[q] += step
            leaving = basis[r]
            self.x[leaving] = target
            self._pivot(r, q)

    def _dual(self):
        stall = 0
        last_obj = -np.inf
        while True:
            if self.iterations > self._cap:
                raise LpStalled("simplex iteration cap reached")
            if self.m == 0:
                return OPTIMAL
            infeas = self._infeasibility()
            bland = stall >= _BLAND_AFTER
            if bland:
                cand = np.flatnonzero(infeas > self.ptol)
                if cand.size == 0:
                    return OPTIMAL
                r = int(cand[np.argmin(self.basis[cand])])
            else:
                r = int(np.argmax(infeas))
                if infeas[r] <= self.ptol:
                    return OPTIMAL
            leaving = self.basis[r]
            xr = self.x[leaving]
            row = self.T[r]
            nb = ~self.is_basic
            can_inc = nb & (self.x < self.ub - 1e-12)
            can_dec = nb & (self.x > self.lb + 1e-12)
            if xr < self.lb[leaving]:
                target = self.lb[leaving]
                elig = (can_inc & (row < -_PIVOT_TOL)) | (can_dec & (row > _PIVOT_TOL))
            else:
                target = self.ub[leaving]
                elig = (can_inc & (row > _PIVOT_TOL)) | (can_dec & (row < -_PIVOT_TOL))
            idx = np.flatnonzero(elig)
            if idx.size == 0:
                return INFEASIBLE
            absrow = np.abs(row[idx])
            absd = np.abs(self.d[idx])
            ratios = absd / absrow
            if bland:
                tmin = ratios.min()
                cand = idx[ratios <= tmin + 1e-12]
                q = int(cand.min())
            else:
                tmax = ((absd + self.dtol) / absrow).min()
                ok = ratios <= tmax
                q = int(idx[ok][np.argmax(absrow[ok])])
            dq = (xr - target) / row[q]
            self.x[q] += dq
            self.x[self.basis] -= self.T[:, q] * dq
            self.x[leaving] = target
            self._pivot(r, q)
            obj = self.objective()
            if obj < last_obj - 1e-12:
                stall = 0
            else:
                stall += 1
            last_obj = obj


def _slack_bounds(senses):
    k = len(senses)
    lb = np.zeros(k)
    ub = np.zeros(k)
    for i, s in enumerate(senses):
        if s == "<=":
            ub[i] = np.inf
        elif s == ">=":
            lb[i] = -np.inf
        elif s not in ("==", "="):
            raise ValueError(f"unknown constraint sense {s!r}")
    return lb, ub


def lp_solve(A, senses, b, c, lb=None, ub=None, maximize=True):
    """One-shot LP solve; returns ``(status, x, objective)``."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
    sign = 1.0 if maximize else -1.0
    lp = DenseSimplex(A, senses, b, sign * c, lb, ub)
    status = lp.solve()
    if status != OPTIMAL:
        return status, None, None
    x = lp.values()
    return status, x, float(c @ x)
