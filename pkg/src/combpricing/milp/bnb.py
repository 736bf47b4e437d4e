"""Best-bound branch and bound with lazy constraints."""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, DenseSimplex, LpStalled

INT_TOL = 1e-6
FEAS_TOL = 1e-6


@dataclass
class MilpModel:
    """Dense MILP ``opt c.x  s.t.  A x (senses) b,  lb <= x <= ub``."""

    c: np.ndarray
    A: np.ndarray
    senses: list
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    maximize: bool = True
    priority: Optional[np.ndarray] = None
    names: Optional[list] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = len(self.c)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.integer = np.asarray(self.integer, dtype=bool)
        self.senses = list(self.senses)
        if self.priority is None:
            self.priority = np.zeros(n, dtype=int)
        if self.names is None:
            self.names = [f"v{j}" for j in range(n)]

    @property
    def num_vars(self):
        return len(self.c)

    def copy(self):
        return MilpModel(self.c.copy(), self.A.copy(), list(self.senses), self.b.copy(),
                         self.lb.copy(), self.ub.copy(), self.integer.copy(), self.maximize,
                         np.array(self.priority), list(self.names))

    def add_vars(self, new_vars):
        k = len(new_vars)
        if not k:
            return
        self.c = np.concatenate([self.c, [v.obj for v in new_vars]])
        self.A = np.hstack([self.A, np.zeros((self.A.shape[0], k))])
        self.lb = np.concatenate([self.lb, [v.lb for v in new_vars]])
        self.ub = np.concatenate([self.ub, [v.ub for v in new_vars]])
        self.integer = np.concatenate([self.integer, np.zeros(k, dtype=bool)])
        self.priority = np.concatenate([self.priority, np.zeros(k, dtype=int)])
        self.names = self.names + [v.name for v in new_vars]

    def add_cuts(self, cuts):
        if not cuts:
            return
        rows = np.array([cut.dense(self.num_vars) for cut in cuts])
        self.A = np.vstack([self.A, rows])
        self.senses += [cut.sense for cut in cuts]
        self.b = np.concatenate([self.b, [cut.rhs for cut in cuts]])

    def violation(self, x):
        """Largest constraint or bound violation of ``x``."""
        x = np.asarray(x, dtype=float)
        worst = max(0.0, float(np.max(self.lb - x, initial=0.0)), float(np.max(x - self.ub, initial=0.0)))
        if self.A.shape[0]:
            worst = max(worst, _row_violation(self.A @ x, self.senses, self.b))
        return worst


def _row_violation(ax, senses, b):
    worst = 0.0
    for val, s, r in zip(ax, senses, b):
        if s == "<=":
            worst = max(worst, val - r)
        elif s == ">=":
            worst = max(worst, r - val)
        else:
            worst = max(worst, abs(val - r))
    return worst


@dataclass
class NewVar:
    lb: float = -np.inf
    ub: float = np.inf
    obj: float = 0.0
    name: str = ""


@dataclass
class Cut:
    """Sparse row ``sum coef[j] x_j (sense) rhs``."""

    coef: dict
    sense: str
    rhs: float
    tag: object = None

    def dense(self, n):
        row = np.zeros(n)
        for j, a in self.coef.items():
            row[j] += a
        return row


@dataclass
class LazyResult:
    """Callback verdict.  Empty ``cuts`` means the candidate is accepted."""

    cuts: list = field(default_factory=list)
    new_vars: list = field(default_factory=list)
    incumbents: list = field(default_factory=list)

    @property
    def accept(self):
        return not self.cuts


@dataclass
class BbStats:
    nodes: int = 0
    callback_calls: int = 0
    callback_time: float = 0.0
    cuts_added: int = 0
    total_time: float = 0.0
    lp_iterations: int = 0


@dataclass
class MilpSolution:
    status: str
    x: Optional[np.ndarray]
    objective: float
    bound: float
    gap: float
    stats: BbStats
    model: MilpModel


@dataclass(order=True)
class _Node:
    key: tuple
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)
    bound: float = field(compare=False)
    depth: int = field(compare=False)
    basis: object = field(compare=False, default=None)


def relative_gap(obj, bound, maximize=True, eps=1e-9):
    if not np.isfinite(obj):
        return np.inf
    diff = (bound - obj) if maximize else (obj - bound)
    return max(0.0, diff) / max(abs(bound) if maximize else abs(obj), eps)


def milp_solve(model: MilpModel, callback: Optional[Callable] = None, incumbents=(),
               time_limit=np.inf, node_limit=np.inf, rel_tol=1e-9, abs_tol=1e-6):
    """Solve ``model`` by best-bound branch and bound.

    ``callback(values)`` is invoked on every integer-feasible LP solution and
    returns ``None`` (accept) or a ``LazyResult``.  Cuts are global.  If the
    callback object has a ``complete(values)`` method it is used to repair
    the incumbent after new rows or columns make it stale.
    """
    start = time.perf_counter()
    model = model.copy()
    stats = BbStats()
    sign = 1.0 if model.maximize else -1.0
    lp = DenseSimplex(model.A, model.senses, model.b, sign * model.c, model.lb, model.ub)
    int_idx = np.flatnonzero(model.integer)
    prio = model.priority[int_idx]

    inc_x = None
    inc_val = -np.inf  # internal (maximize) units

    def offer(x):
        nonlocal inc_x, inc_val
        x = np.asarray(x, dtype=float)
        if len(x) != model.num_vars:
            return False
        xi = x[int_idx]
        if np.any(np.abs(xi - np.round(xi)) > INT_TOL):
            return False
        if model.violation(x) > FEAS_TOL:
            return False
        val = sign * float(model.c @ x)
        if val > inc_val:
            inc_x, inc_val = x.copy(), val
            return True
        return False

    for x in incumbents:
        offer(x)

    def prunable(z):
        return inc_x is not None and z <= inc_val + max(abs_tol, rel_tol * abs(inc_val))

    seq = 0
    root = _Node((0.0, 0, 0), model.lb[int_idx].copy(), model.ub[int_idx].copy(), np.inf, 0)
    heap = [root]
    status = None
    best_bound = np.inf
    current_basis = None

    while heap:
        open_bound = max(heap[0].bound if heap else -np.inf, inc_val)
        best_bound = min(best_bound, open_bound)
        if time.perf_counter() - start > time_limit or stats.nodes >= node_limit:
            status = "limit"
            break
        node = heapq.heappop(heap)
        if prunable(node.bound):
            continue
        stats.nodes += 1
        lp.set_bounds(int_idx, node.lb, node.ub)
        if node.basis is not None and not _same_basis(node.basis, current_basis):
            lp.set_basis(*node.basis)
        while True:
            try:
                res = lp.solve()
            except LpStalled:
                lp = _rebuild(model, sign, int_idx, node)
                res = lp.solve()
            if res == UNBOUNDED:
                if node.depth == 0:
                    status = UNBOUNDED
                    heap = []
                break
            if res == INFEASIBLE:
                break
            z = lp.objective()
            if prunable(z):
                break
            vals = lp.values()
            frac = np.abs(vals[int_idx] - np.round(vals[int_idx]))
            fractional = frac > INT_TOL
            if fractional.any():
                top = prio[fractional].max()
                cand = np.flatnonzero(fractional & (prio == top))
                k = int(cand[np.argmax(frac[cand])])  # argmax keeps lowest index on ties
                j = int(int_idx[k])
                basis = lp.get_basis()
                lo_ub = node.ub.copy()
                lo_ub[k] = np.floor(vals[j])
                hi_lb = node.lb.copy()
                hi_lb[k] = np.ceil(vals[j])
                for lbv, ubv in ((hi_lb, node.ub.copy()), (node.lb.copy(), lo_ub)):
                    seq += 1
                    child = _Node((-min(z, node.bound), -(node.depth + 1), seq), lbv, ubv,
                                  min(z, node.bound), node.depth + 1, basis)
                    heapq.heappush(heap, child)
                break
            cand_x = vals.copy()
            cand_x[int_idx] = np.round(cand_x[int_idx])
            verdict = None
            if callback is not None:
                stats.callback_calls += 1
                t0 = time.perf_counter()
                verdict = callback(cand_x)
                stats.callback_time += time.perf_counter() - t0
            if verdict is None or verdict.accept:
                if verdict is not None:
                    for x in verdict.incumbents:
                        offer(x)
                offer(cand_x)
                break
            # lazy cuts: extend model and LP, then re-solve this node
            if verdict.new_vars:
                k_old = model.num_vars
                model.add_vars(verdict.new_vars)
                lp.add_columns(np.zeros((lp.m, len(verdict.new_vars))),
                               [v.lb for v in verdict.new_vars], [v.ub for v in verdict.new_vars],
                               sign * np.array([v.obj for v in verdict.new_vars]))
                if inc_x is not None:
                    inc_x = np.concatenate([inc_x, np.zeros(model.num_vars - k_old)])
            model.add_cuts(verdict.cuts)
            rows = model.A[-len(verdict.cuts):]
            lp.add_rows(rows, [c.sense for c in verdict.cuts], [c.rhs for c in verdict.cuts])
            stats.cuts_added += len(verdict.cuts)
            if inc_x is not None and model.violation(inc_x) > FEAS_TOL:
                fixed = None
                if hasattr(callback, "complete"):
                    fixed = callback.complete(inc_x)
                inc_x, inc_val = None, -np.inf
                if fixed is not None:
                    offer(fixed)
            for x in verdict.incumbents:
                offer(x)
        current_basis = lp.get_basis()

    if status is None:
        status = "optimal" if inc_x is not None else INFEASIBLE
        best_bound = inc_val if inc_x is not None else -np.inf
    elif status == "limit":
        open_bound = max((nd.bound for nd in heap), default=-np.inf)
        best_bound = min(best_bound, max(open_bound, inc_val))
    stats.lp_iterations = lp.iterations
    stats.total_time = time.perf_counter() - start
    obj = sign * inc_val if inc_x is not None else np.nan
    bound = sign * best_bound
    if status == UNBOUNDED:
        bound = sign * np.inf
    gap = relative_gap(obj, bound, model.maximize) if inc_x is not None else np.inf
    if status == "optimal":
        gap = 0.0
    return MilpSolution(status, inc_x, obj, bound, gap, stats, model)


def _same_basis(a, b):
    if b is None:
        return False
    return len(a[0]) == len(b[0]) and np.array_equal(a[0], b[0]) and np.array_equal(
        a[1], b[1][: len(a[1])])


def _rebuild(model, sign, int_idx, node):
    lp = DenseSimplex(model.A, model.senses, model.b, sign * model.c, model.lb, model.ub,
                      max_iter=200000)
    lp.set_bounds(int_idx, node.lb, node.ub)
    return lp
