"""Single-level MILP models built from a diagram, plus big-M bounds and cut rows."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import MAXIMIZE, PricingError, items_of
from .milp.bnb import Cut, MilpModel


class TollFreeCoverError(PricingError):
    pass


@dataclass
class Variable:
    name: str
    kind: str  # t | x | s | y | aux
    lb: float = 0.0
    ub: float = np.inf
    integer: bool = False
    ref: object = None  # item index or diagram node id


@dataclass
class Constraint:
    coef: dict
    sense: str
    rhs: float
    name: str = ""


@dataclass
class CutSpec:
    constraint: Constraint
    arc_id: Optional[int] = None
    solution: Optional[int] = None  # follower solution bitmask

    def as_cut(self):
        c = self.constraint
        return Cut(dict(c.coef), c.sense, c.rhs, tag=(self.arc_id, self.solution))


@dataclass
class ModelSpec:
    maximize: bool = True
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    t: dict = field(default_factory=dict)
    x: dict = field(default_factory=dict)
    s: dict = field(default_factory=dict)
    y: dict = field(default_factory=dict)
    follower_sense: str = MAXIMIZE
    kind: str = "cpp"

    def add_var(self, name, kind, lb=0.0, ub=np.inf, integer=False, ref=None):
        self.variables.append(Variable(name, kind, lb, ub, integer, ref))
        return len(self.variables) - 1

    def add_row(self, coef, sense, rhs, name=""):
        c = Constraint({k: float(v) for k, v in coef.items() if v != 0}, sense, float(rhs), name)
        self.constraints.append(c)
        return c

    @property
    def num_vars(self):
        return len(self.variables)

    def arc_rows(self):
        return [c for c in self.constraints if c.name.startswith("arc")]

    def to_milp(self, priority=None):
        n = self.num_vars
        A = np.zeros((len(self.constraints), n))
        for r, c in enumerate(self.constraints):
            for j, a in c.coef.items():
                A[r, j] += a
        obj = np.zeros(n)
        for j, a in self.objective.items():
            obj[j] = a
        return MilpModel(
            c=obj, A=A, senses=[c.sense for c in self.constraints],
            b=np.array([c.rhs for c in self.constraints]),
            lb=np.array([v.lb for v in self.variables]), ub=np.array([v.ub for v in self.variables]),
            integer=np.array([v.integer for v in self.variables]), maximize=self.maximize,
            priority=priority, names=[v.name for v in self.variables])

    def row_text(self, c):
        return _lin(c.coef, self.variables) + f" {c.sense} {_num(c.rhs)}"

    def to_lp(self):
        """Model in CPLEX LP text format."""
        out = ["Maximize" if self.maximize else "Minimize", " obj: " + _lin(self.objective, self.variables),
               "Subject To"]
        for r, c in enumerate(self.constraints):
            sense = {"==": "="}.get(c.sense, c.sense)
            out.append(f" {c.name or 'c'}_{r}: {_lin(c.coef, self.variables)} {sense} {_num(c.rhs)}")
        out.append("Bounds")
        for v in self.variables:
            if v.integer and v.lb == 0 and v.ub == 1:
                continue
            if v.lb == -np.inf and v.ub == np.inf:
                out.append(f" {v.name} free")
            elif v.lb == v.ub:
                out.append(f" {v.name} = {_num(v.lb)}")
            else:
                lo = "-inf" if v.lb == -np.inf else _num(v.lb)
                hi = "+inf" if v.ub == np.inf else _num(v.ub)
                out.append(f" {lo} <= {v.name} <= {hi}")
        bins = [v.name for v in self.variables if v.integer and v.lb == 0 and v.ub == 1]
        gens = [v.name for v in self.variables if v.integer and not (v.lb == 0 and v.ub == 1)]
        if bins:
            out += ["Binaries", " " + " ".join(bins)]
        if gens:
            out += ["Generals", " " + " ".join(gens)]
        out.append("End")
        return "\n".join(out) + "\n"


def _num(a):
    a = float(a)
    return str(int(a)) if a.is_integer() else repr(a)


def _lin(coef, variables):
    if not coef:
        return "0"
    parts = []
    for j in sorted(coef):
        a = coef[j]
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        term = variables[j].name if mag == 1 else f"{_num(mag)} {variables[j].name}"
        parts.append(f"{sign} {term}")
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


# ----------------------------------------------------------------------

def primal_constraints(instance):
    """Follower feasibility rows over x as ``(coef by item, sense, rhs)`` triples."""
    p = instance.problem
    d = instance.payload
    if p == "kpp":
        return [({i: w for i, w in enumerate(d.w) if w}, "<=", d.C)]
    if p == "kip":
        return [({i: w for i, w in enumerate(d.w) if w}, "<=", d.c)]
    if p == "maxsspp":
        return [({a: 1, b: 1}, "<=", 1) for a, b in d.edges]
    if p == "minscpp":
        rows = []
        for e in range(d.n_elements):
            rows.append(({i: 1 for i, s in enumerate(d.sets) if e in s}, ">=", 1))
        return rows
    raise ValueError(f"unknown problem {p!r}")


def mccormick_bounds(instance):
    """Valid upper bounds on ``t_i x_i`` at an optimum, per item (zero for toll-free items)."""
    n = instance.n
    M = np.zeros(n)
    tolled = list(instance.tolled)
    if instance.problem in ("kpp", "maxsspp"):
        M[tolled] = instance.v[tolled]
        return M
    if instance.problem == "kip":
        return M
    prob = instance.follower()
    v = instance.v
    free = 0
    for i in instance.tollfree:
        free |= 1 << i
    f_inf_E = prob.min_cover_cost(v, allowed=free)
    for i in tolled:
        P = prob.min_cover_cost(v, allowed=free, target=prob.sets[i]) - v[i]
        if not np.isfinite(P):
            raise TollFreeCoverError("toll-free cover assumption violated")
        Q = f_inf_E - prob.min_cover_cost(v, target=prob.full & ~prob.sets[i]) - v[i]
        M[i] = max(0.0, min(P, Q))
    return M


def arc_row(spec, instance, arc, diagram):
    """Inequality of one diagram arc in the current model's variables."""
    items = items_of(arc.items)
    v = instance.v
    yu, yw = spec.y[arc.src], spec.y[arc.dst]
    coef = {yu: 1.0}
    coef[yw] = coef.get(yw, 0.0) - 1.0
    rhs = float(sum(v[i] for i in items))
    if spec.kind == "kip":
        for i in items:
            coef[spec.t[i]] = coef.get(spec.t[i], 0.0) + v[i]
        return Constraint({k: a for k, a in coef.items() if a}, ">=", rhs, f"arc{arc.id}")
    if spec.follower_sense == MAXIMIZE:
        for i in items:
            if i in spec.t:
                coef[spec.t[i]] = coef.get(spec.t[i], 0.0) + 1.0
        return Constraint({k: a for k, a in coef.items() if a}, ">=", rhs, f"arc{arc.id}")
    for i in items:
        if i in spec.t:
            coef[spec.t[i]] = coef.get(spec.t[i], 0.0) - 1.0
    return Constraint({k: a for k, a in coef.items() if a}, "<=", rhs, f"arc{arc.id}")


def cut_from_arc(spec, instance, arc, diagram, solution=None):
    return CutSpec(arc_row(spec, instance, arc, diagram), arc.id, solution)


def _node_name(diagram, nid):
    if nid == diagram.p:
        return "y_p"
    if nid == diagram.q:
        return "y_q"
    return f"y_n{nid}"


def _add_node_vars(spec, diagram, y_p_lb=-np.inf):
    for nd in diagram.nodes:
        if nd.id == diagram.q:
            lb = ub = 0.0
        elif nd.id == diagram.p:
            lb, ub = y_p_lb, np.inf
        else:
            lb, ub = -np.inf, np.inf
        spec.y[nd.id] = spec.add_var(_node_name(diagram, nd.id), "y", lb, ub, ref=nd.id)


def build_master(instance, diagram, M=None):
    """Pricing master: revenue over tolls and a follower solution certified optimal by the diagram."""
    if instance.problem == "kip":
        raise ValueError("use build_kip_master for interdiction instances")
    if M is None:
        M = mccormick_bounds(instance)
    M = np.asarray(M, dtype=float)
    sense = instance.sense
    spec = ModelSpec(maximize=True, follower_sense=sense)
    for i in instance.tolled:
        spec.t[i] = spec.add_var(f"t_{i}", "t", 0.0, np.inf, ref=i)
    for i in range(instance.n):
        spec.x[i] = spec.add_var(f"x_{i}", "x", 0.0, 1.0, integer=True, ref=i)
    for i in instance.tolled:
        spec.s[i] = spec.add_var(f"s_{i}", "s", 0.0, np.inf, ref=i)
    _add_node_vars(spec, diagram)
    for coef, sns, rhs in primal_constraints(instance):
        spec.add_row({spec.x[i]: a for i, a in coef.items()}, sns, rhs, "primal")
    for a in diagram.arcs:
        spec.constraints.append(arc_row(spec, instance, a, diagram))
    # strong duality: follower value of x equals y_p
    sd = {spec.x[i]: instance.v[i] for i in range(instance.n)}
    sgn = -1.0 if sense == MAXIMIZE else 1.0
    for i in instance.tolled:
        sd[spec.s[i]] = sgn
    sd[spec.y[diagram.p]] = -1.0
    spec.add_row(sd, "==", 0.0, "duality")
    for i in instance.tolled:
        spec.add_row({spec.s[i]: 1.0, spec.x[i]: -M[i]}, "<=", 0.0, "mc_upper")
        spec.add_row({spec.t[i]: 1.0, spec.s[i]: -1.0}, ">=", 0.0, "mc_lower")
        spec.add_row({spec.t[i]: 1.0, spec.s[i]: -1.0, spec.x[i]: M[i]}, "<=", M[i], "mc_gap")
    spec.objective = {spec.s[i]: 1.0 for i in instance.tolled}
    return spec


def build_kip_master(instance, diagram):
    """Interdiction master: minimize the follower value certified by the diagram."""
    d = instance.payload
    spec = ModelSpec(maximize=False, kind="kip")
    for i in range(instance.n):
        spec.t[i] = spec.add_var(f"t_{i}", "t", 0.0, 1.0, integer=True, ref=i)
    for i in range(instance.n):
        spec.x[i] = spec.add_var(f"x_{i}", "x", 0.0, 1.0, integer=True, ref=i)
    # y_p >= 0 holds at every solution since the empty packing is feasible
    _add_node_vars(spec, diagram, y_p_lb=0.0)
    spec.add_row({spec.t[i]: W for i, W in enumerate(d.W) if W}, "<=", d.C, "leader")
    spec.add_row({spec.x[i]: w for i, w in enumerate(d.w) if w}, "<=", d.c, "primal")
    for a in diagram.arcs:
        spec.constraints.append(arc_row(spec, instance, a, diagram))
    spec.objective = {spec.y[diagram.p]: 1.0}
    return spec
