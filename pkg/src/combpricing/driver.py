"""Cutting-plane solution of pricing and interdiction instances over growing diagrams."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (MAXIMIZE, TIE_TOL, ConfigError, FollowerSolution, SolveResult, SolveStats,
                   optimistic_best_response)
from .diagrams import (dd_add_solution, dd_init, make_grouping, sd_add_solution, sd_init,
                       vf_diagram)
from .diagrams.diagram import item_lengths
from .milp import LazyResult, get_backend
from .milp.bnb import Cut
from .reformulate import arc_row, build_kip_master, build_master, mccormick_bounds

METHODS = ("vf", "sd", "dd")
MODES = ("callback", "iterative")


@dataclass
class MethodConfig:
    method: str = "vf"
    pairs: int = 0  # N, sampled pairs of the selection diagram
    width: int = 0  # W, sampled paths of the decision diagram
    layers: int | None = None  # m, number of item groups (None: one item per layer)
    seed: int = 0
    mode: str = "callback"
    eps: float = TIE_TOL
    time_limit: float = np.inf
    node_limit: float = np.inf
    backend: str = "simplex"

    def validate(self, n=None):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.pairs < 0 or self.width < 0:
            raise ConfigError("pairs and width must be nonnegative")
        if self.layers is not None and n is not None and not 1 <= self.layers <= n:
            raise ConfigError(f"layers must lie in [1, {n}]")
        if self.eps < 0:
            raise ConfigError("eps must be nonnegative")
        get_backend(self.backend)
        return self

    @property
    def label(self):
        if self.method == "sd":
            return f"SD(N={self.pairs})"
        if self.method == "dd":
            m = "" if self.layers is None else f",m={self.layers}"
            return f"DD(W={self.width}{m})"
        return "VF"


def initial_diagram(instance, config):
    """Starting diagram of the configured method; all sampling shares one seeded stream."""
    config.validate(instance.n)
    rng = np.random.default_rng(config.seed)
    if config.method == "vf":
        return vf_diagram(instance), rng
    if config.method == "sd":
        return sd_init(instance, config.pairs, rng), rng
    grouping = None if config.layers is None else make_grouping(instance.n, config.layers, rng)
    return dd_init(instance, config.width, grouping, rng), rng


# ----------------------------------------------------------------------
# node potentials for injected incumbents

def node_potentials(diagram, lengths, sense):
    """Values y satisfying every arc row for the given item lengths.

    Nodes reaching q get their longest (shortest for min) distance to q.  The
    others are set from their in-arcs so their rows hold as well.
    """
    arc_len = diagram.arc_weights(lengths)
    order = diagram.topo_order()
    ok = diagram.reaches_q()
    y = np.zeros(diagram.num_nodes)
    best = max if sense == MAXIMIZE else min
    for u in reversed(order):
        if u == diagram.q or not ok[u]:
            continue
        y[u] = best(arc_len[a.id] + y[a.dst] for a in diagram.out_arcs[u] if ok[a.dst])
    pick = min if sense == MAXIMIZE else max
    for w in order:
        if ok[w]:
            continue
        ins = [y[a.src] - arc_len[a.id] for a in diagram.in_arcs[w]]
        y[w] = pick(ins) if ins else 0.0
    return y


# ----------------------------------------------------------------------
# lazy constraint callbacks

class _Separator:
    """Shared bookkeeping of the pricing and interdiction callbacks."""

    def __init__(self, instance, config, diagram, rng, spec):
        self.instance = instance
        self.config = config
        self.diagram = diagram
        self.rng = rng
        self.spec = spec
        self.prob = instance.follower()
        self.n = instance.n
        self.added = []  # follower solutions inserted, in order
        self.fallbacks = 0
        self.numerical_accepts = 0
        self.trajectory = []  # master objective at each rejected candidate

    def _insert(self, sol):
        d = self.diagram
        if self.config.method == "vf":
            a = d.add_arc(d.p, d.q, sol.mask)
            new = [] if a is None else [a]
        elif self.config.method == "sd":
            a = sd_add_solution(d, sol, self.rng)
            new = [] if a is None else [a]
        else:
            new = dd_add_solution(d, self.instance, sol)
        if not new:
            # the solution is already a path; a direct p->q arc still guarantees progress
            a = d.add_arc(d.p, d.q, sol.mask)
            if a is not None:
                self.fallbacks += 1
                new = [a]
        return new

    def _cuts(self, arcs, sol):
        out = []
        for a in arcs:
            c = arc_row(self.spec, self.instance, a, self.diagram)
            out.append(Cut(dict(c.coef), c.sense, c.rhs, tag=(a.id, sol.mask)))
            self.spec.constraints.append(c)
        return out

    def _tolls(self, values):
        t = np.zeros(self.n)
        for i, j in self.spec.t.items():
            t[i] = values[j]
        return t

    def _x(self, values):
        x = np.zeros(self.n)
        for i, j in self.spec.x.items():
            x[i] = round(values[j])
        return x


class CppSeparator(_Separator):
    """Checks follower optimality of a candidate and grows the diagram when it fails."""

    def __init__(self, instance, config, diagram, rng, spec, M):
        super().__init__(instance, config, diagram, rng, spec)
        self.M = M

    def __call__(self, values):
        t = np.maximum(self._tolls(values), 0.0)
        x = self._x(values)
        sol, best, _ = optimistic_best_response(self.prob, t)
        cur = float(self.prob.follower_profit(t) @ x)
        if not self.prob.better(best, cur, self.config.eps):
            return None
        sol = self.prob.complete(sol)
        arcs = self._insert(sol)
        if not arcs:
            self.numerical_accepts += 1
            return None
        self.added.append(sol)
        self.trajectory.append(float(sum(values[j] for j in self.spec.s.values())))
        cuts = self._cuts(arcs, sol)
        return LazyResult(cuts=cuts, incumbents=[self.assignment(t, sol.to_array())])

    def assignment(self, t, x):
        """Full master vector for tolls ``t`` and an optimal response ``x``."""
        spec = self.spec
        out = np.zeros(spec.num_vars)
        for i, j in spec.t.items():
            out[j] = t[i]
        for i, j in spec.x.items():
            out[j] = x[i]
        for i, j in spec.s.items():
            out[j] = t[i] * x[i]
        y = node_potentials(self.diagram, item_lengths(self.instance, t), self.instance.sense)
        for nid, j in spec.y.items():
            out[j] = y[nid]
        return out

    def complete(self, values):
        """Recompute the node potentials of a stale incumbent against the current diagram."""
        values = np.asarray(values, dtype=float)
        if len(values) < self.spec.num_vars:
            values = np.concatenate([values, np.zeros(self.spec.num_vars - len(values))])
        return self.assignment(self._tolls(values), self._x(values))


class KipSeparator(_Separator):
    """Accepts a candidate when its y_p matches the follower optimum under its interdiction."""

    def __call__(self, values):
        t = np.round(self._tolls(values))
        sol, best, _ = optimistic_best_response(self.prob, t)
        yp = values[self.spec.y[self.diagram.p]]
        if yp >= best - self.config.eps:
            return None
        sol = self.prob.complete(sol)
        arcs = self._insert(sol)
        if not arcs:
            self.numerical_accepts += 1
            return None
        self.added.append(sol)
        self.trajectory.append(float(yp))
        cuts = self._cuts(arcs, sol)
        return LazyResult(cuts=cuts, incumbents=[self.assignment(t)])

    def assignment(self, t):
        spec = self.spec
        sol, _, _ = optimistic_best_response(self.prob, t)
        out = np.zeros(spec.num_vars)
        for i, j in spec.t.items():
            out[j] = t[i]
        x = sol.to_array()
        for i, j in spec.x.items():
            out[j] = x[i]
        y = node_potentials(self.diagram, item_lengths(self.instance, t), MAXIMIZE)
        for nid, j in spec.y.items():
            out[j] = y[nid]
        return out

    def complete(self, values):
        values = np.asarray(values, dtype=float)
        if len(values) < self.spec.num_vars:
            values = np.concatenate([values, np.zeros(self.spec.num_vars - len(values))])
        return self.assignment(np.round(self._tolls(values)))


# ----------------------------------------------------------------------

def _run(model, sep, config):
    backend = get_backend(config.backend)
    solve = backend.solve if config.mode == "callback" else backend.solve_iterative
    return solve(model, sep, (), time_limit=config.time_limit, node_limit=config.node_limit)


def _stats(sol, sep, elapsed):
    st = sol.stats
    return SolveStats(total_time=elapsed, callback_time=st.callback_time,
                      callback_calls=st.callback_calls, bb_nodes=st.nodes,
                      cuts_added=st.cuts_added, iterations=len(sep.added))


def _extra(sep, diagram, config):
    return {"method": config.label, "mode": config.mode, "added": [s.mask for s in sep.added],
            "fallback_cuts": sep.fallbacks, "numerical_accepts": sep.numerical_accepts,
            "trajectory": list(sep.trajectory), "diagram": diagram,
            "nodes": diagram.num_nodes, "arcs": len(diagram.arcs)}


def solve_cpp(instance, config=None, diagram=None, M=None):
    """Optimal tolls of a pricing instance by lazy diagram cuts.

    ``diagram`` overrides the configured initial diagram (it is grown in place)
    and ``M`` the McCormick bounds.
    """
    config = (config or MethodConfig()).validate(instance.n)
    if instance.problem == "kip":
        return solve_kip(instance, config, diagram)
    start = time.perf_counter()
    if diagram is None:
        diagram, rng = initial_diagram(instance, config)
    else:
        rng = np.random.default_rng(config.seed)
    M = mccormick_bounds(instance) if M is None else np.asarray(M, dtype=float)
    spec = build_master(instance, diagram, M)
    sep = CppSeparator(instance, config, diagram, rng, spec, M)
    sol = _run(spec.to_milp(), sep, config)
    elapsed = time.perf_counter() - start
    stats = _stats(sol, sep, elapsed)
    extra = _extra(sep, diagram, config)
    if sol.x is None:
        return SolveResult(sol.status, None, None, np.nan, sol.bound, sol.gap, stats, extra=extra)
    t = instance.tolls(np.maximum(sep._tolls(sol.x), 0.0))
    x = FollowerSolution.from_array(sep._x(sol.x), instance.n)
    return SolveResult(sol.status, t, x, float(sol.objective), float(sol.bound), float(sol.gap),
                       stats, extra=extra)


def solve_kip(instance, config=None, diagram=None):
    """Optimal interdiction of a knapsack interdiction instance by lazy diagram cuts."""
    config = (config or MethodConfig()).validate(instance.n)
    start = time.perf_counter()
    if diagram is None:
        diagram, rng = initial_diagram(instance, config)
    else:
        rng = np.random.default_rng(config.seed)
    spec = build_kip_master(instance, diagram)
    sep = KipSeparator(instance, config, diagram, rng, spec)
    prio = np.array([1 if v.kind == "t" else 0 for v in spec.variables])
    sol = _run(spec.to_milp(priority=prio), sep, config)
    elapsed = time.perf_counter() - start
    stats = _stats(sol, sep, elapsed)
    extra = _extra(sep, diagram, config)
    if sol.x is None:
        return SolveResult(sol.status, None, None, 0.0, sol.bound, sol.gap, stats,
                           objective=np.nan, extra=extra)
    t = np.round(sep._tolls(sol.x))
    # the follower value at the rounded interdiction is exact; the LP value carries float residue
    x, val, _ = optimistic_best_response(instance.follower(), t)
    return SolveResult(sol.status, t, x, 0.0, float(sol.bound), float(sol.gap), stats,
                       objective=float(val), extra=extra)


def solve(instance, config=None):
    if instance.problem == "kip":
        return solve_kip(instance, config)
    return solve_cpp(instance, config)


# ----------------------------------------------------------------------

@dataclass
class VerifyReport:
    ok: bool
    follower_value: float
    reported_follower_value: float
    revenue: float
    reported_revenue: float
    issues: list = field(default_factory=list)


def verify(instance, result, eps=TIE_TOL, rtol=1e-6):
    """Recheck a result against the follower's optimistic best response at its tolls."""
    if result.tolls is None:
        return VerifyReport(False, np.nan, np.nan, np.nan, np.nan, ["no solution"])
    prob = instance.follower()
    t = np.asarray(result.tolls, dtype=float)
    sol, best, rev = optimistic_best_response(prob, t)
    issues = []
    if instance.problem == "kip":
        W = np.asarray(instance.payload.W, dtype=float)
        if float(W @ t) > instance.payload.C + 1e-9:
            issues.append("interdiction budget exceeded")
        if abs(best - result.objective) > eps * max(1.0, abs(best)):
            issues.append(f"follower value {best} differs from reported {result.objective}")
        return VerifyReport(not issues, best, result.objective, 0.0, 0.0, issues)
    if np.any(t < -1e-9) or np.any(np.abs(t[~instance.tolled_bool]) > 1e-9):
        issues.append("tolls outside the tolled items or negative")
    x = result.response
    reported = np.nan
    if x is not None:
        if not prob.is_feasible(x.mask):
            issues.append("reported response is infeasible")
        reported = float(prob.follower_profit(t) @ x.to_array())
        if prob.better(best, reported, eps):
            issues.append(f"reported response value {reported} is not optimal ({best})")
    if abs(rev - result.revenue) > max(eps, rtol * abs(rev)):
        issues.append(f"revenue {result.revenue} differs from recomputed {rev}")
    return VerifyReport(not issues, best, reported, rev, result.revenue, issues)
