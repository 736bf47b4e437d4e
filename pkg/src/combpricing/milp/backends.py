"""Solver backends.

A backend pairs a callback-aware solve with the signature of
:func:`milp_solve` and a plain single solve.  The built-in ``simplex``
backend runs callbacks natively inside the tree; the ``highs`` backend wraps
``scipy.optimize.milp`` and emulates callbacks by re-solving after each
round of cuts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ..core import ConfigError
from .bnb import BbStats, MilpSolution, milp_solve, relative_gap

_BACKENDS = {}


@dataclass(frozen=True)
class Backend:
    """``solve`` honours callbacks (natively or by re-solving); ``solve_once`` ignores them."""

    name: str
    solve: Callable
    solve_once: Callable

    def solve_iterative(self, model, callback=None, incumbents=(), time_limit=np.inf,
                        node_limit=np.inf):
        return iterative_resolve(self.solve_once, model, callback, incumbents, time_limit, node_limit)


def register_backend(name, solve, solve_once=None):
    _BACKENDS[name] = Backend(name, solve, solve_once or solve)


def get_backend(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigError(f"unknown MILP backend {name!r}; known: {sorted(_BACKENDS)}") from None


def available_backends():
    return sorted(_BACKENDS)


def iterative_resolve(solve_once, model, callback=None, incumbents=(), time_limit=np.inf,
                      node_limit=np.inf, **kw):
    """Run ``callback`` outside the solver: solve, check, add cuts, solve again from scratch."""
    start = time.perf_counter()
    model = model.copy()
    stats = BbStats()
    incs = [np.asarray(x, dtype=float) for x in incumbents]
    best_x, best_val = None, -np.inf
    sign = 1.0 if model.maximize else -1.0
    while True:
        remaining = time_limit - (time.perf_counter() - start)
        if remaining <= 0:
            return _limit(model, best_x, best_val, sol_bound, stats, start)
        sol = solve_once(model, None, incs, time_limit=remaining, node_limit=node_limit, **kw)
        stats.nodes += sol.stats.nodes
        stats.lp_iterations += sol.stats.lp_iterations
        sol_bound = sign * sol.bound
        if sol.status != "optimal":
            if sol.status == "limit":
                return _limit(model, best_x, best_val, sol_bound, stats, start, sol)
            stats.total_time = time.perf_counter() - start
            return MilpSolution(sol.status, None, np.nan, sol.bound, np.inf, stats, model)
        x = sol.x
        verdict = None
        if callback is not None:
            stats.callback_calls += 1
            t0 = time.perf_counter()
            verdict = callback(x)
            stats.callback_time += time.perf_counter() - t0
        if verdict is None or verdict.accept:
            stats.total_time = time.perf_counter() - start
            return MilpSolution("optimal", x, sol.objective, sol.objective, 0.0, stats, model)
        model.add_vars(verdict.new_vars)
        model.add_cuts(verdict.cuts)
        stats.cuts_added += len(verdict.cuts)
        pool = []
        for y in incs + [np.asarray(v, dtype=float) for v in verdict.incumbents]:
            if len(y) < model.num_vars or model.violation(y) > 1e-6:
                y = callback.complete(y) if hasattr(callback, "complete") else None
            if y is not None and len(y) == model.num_vars and model.violation(y) <= 1e-6:
                pool.append(y)
        incs = pool
        for y in incs:
            val = sign * float(model.c @ y)
            if val > best_val:
                best_x, best_val = y, val


def _limit(model, best_x, best_val, bound, stats, start, sol=None):
    if sol is not None and sol.x is not None:
        val = (1.0 if model.maximize else -1.0) * sol.objective
        if val > best_val:
            best_x, best_val = sol.x, val
    sign = 1.0 if model.maximize else -1.0
    stats.total_time = time.perf_counter() - start
    obj = sign * best_val if best_x is not None else np.nan
    b = sign * bound
    gap = relative_gap(obj, b, model.maximize) if best_x is not None else np.inf
    return MilpSolution("limit", best_x, obj, b, gap, stats, model)


def _highs_once(model, callback=None, incumbents=(), time_limit=np.inf, node_limit=np.inf, **kw):
    start = time.perf_counter()
    c = -model.c if model.maximize else model.c
    lo = np.full(len(model.b), -np.inf)
    hi = np.full(len(model.b), np.inf)
    for i, s in enumerate(model.senses):
        if s in ("<=", "=="):
            hi[i] = model.b[i]
        if s in (">=", "=="):
            lo[i] = model.b[i]
    # HiGHS presolve (scipy 1.15) returns a wrong optimum on some tiny mixed models
    options = {"presolve": False}
    if np.isfinite(time_limit):
        options["time_limit"] = float(time_limit)
    if np.isfinite(node_limit):
        options["node_limit"] = int(node_limit)
    cons = LinearConstraint(model.A, lo, hi) if model.A.shape[0] else ()
    res = milp(c, constraints=cons, integrality=model.integer.astype(int),
               bounds=Bounds(model.lb, model.ub), options=options)
    stats = BbStats(total_time=time.perf_counter() - start)
    if res.status == 0:
        x = res.x.copy()
        x[model.integer] = np.round(x[model.integer])
        obj = float(model.c @ x)
        return MilpSolution("optimal", x, obj, obj, 0.0, stats, model)
    if res.status == 2:
        return MilpSolution("infeasible", None, np.nan, np.nan, np.inf, stats, model)
    if res.status == 3:
        return MilpSolution("unbounded", None, np.nan, np.inf, np.inf, stats, model)
    # limit: scipy gives the incumbent if any, and a dual bound in mip_dual_bound
    bound = getattr(res, "mip_dual_bound", None)
    bound = np.inf if bound is None else (-bound if model.maximize else bound)
    if res.x is not None:
        obj = float(model.c @ res.x)
        gap = relative_gap(obj, bound, model.maximize)
        return MilpSolution("limit", res.x, obj, bound, gap, stats, model)
    return MilpSolution("limit", None, np.nan, bound, np.inf, stats, model)


def highs_solve(model, callback=None, incumbents=(), time_limit=np.inf, node_limit=np.inf, **kw):
    return iterative_resolve(_highs_once, model, callback, incumbents, time_limit, node_limit)


register_backend("simplex", milp_solve)
register_backend("highs", highs_solve, _highs_once)
