"""Decision diagrams with item grouping, valid transitions and dynamic path insertion."""

from __future__ import annotations

from itertools import combinations

import numpy as np

from ..core import MAXIMIZE, InstanceTooLarge, items_of, mask_of
from .diagram import DECISION, Diagram


def make_grouping(n, m, rng):
    """Random partition of the items into ``m`` groups of near-equal size."""
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    perm = rng.permutation(n)
    return [tuple(sorted(int(i) for i in chunk)) for chunk in np.array_split(perm, m)]


def singleton_grouping(n):
    return [(i,) for i in range(n)]


# ----------------------------------------------------------------------
# per-problem state models

class _Model:
    """State semantics of a decision diagram for one follower problem.

    Layer k holds the state after the items of groups 1..k are decided.
    """

    state_kind = "plain"
    q_state = 0

    def __init__(self, instance, grouping):
        self.instance = instance
        self.groups = list(grouping)
        self.m = len(self.groups)
        self.gmask = [mask_of(g) for g in self.groups]
        # items strictly after layer k
        self.later = [0] * (self.m + 1)
        for k in range(self.m - 1, -1, -1):
            self.later[k] = self.later[k + 1] | self.gmask[k]
        # items of groups j+1..k are span[k] & ~span[j]
        self.span = [0] * (self.m + 1)
        for k in range(1, self.m + 1):
            self.span[k] = self.span[k - 1] | self.gmask[k - 1]

    def between(self, j, k):
        return self.span[k] & ~self.span[j]

    def p_state(self):
        raise NotImplementedError

    def step(self, state, k, chosen):
        """State entering layer ``k`` after choosing ``chosen`` from group k (None if infeasible)."""
        raise NotImplementedError

    def valid(self, sj, sk, items):
        raise NotImplementedError


class _KnapsackModel(_Model):
    state_kind = "capacity"

    def __init__(self, instance, grouping, cap=True):
        super().__init__(instance, grouping)
        f = instance.follower()
        self.w = [int(x) for x in f.w]
        self.C = int(f.C)
        self.cap = cap
        self.rem = [sum(self.w[i] for i in items_of(self.later[k])) for k in range(self.m + 1)]

    def weight(self, mask):
        return sum(self.w[i] for i in items_of(mask))

    def p_state(self):
        return min(self.C, self.rem[0]) if self.cap else self.C

    def step(self, state, k, chosen):
        s = state - self.weight(chosen)
        if s < 0:
            return None
        if k == self.m:
            return 0
        return min(s, self.rem[k]) if self.cap else s

    def valid(self, sj, sk, items):
        return sj - self.weight(items) >= sk


class _StableSetModel(_Model):
    state_kind = "items"

    def __init__(self, instance, grouping):
        super().__init__(instance, grouping)
        self.nbr = instance.follower().nbr

    def closed(self, mask):
        out = 0
        for i in items_of(mask):
            out |= self.nbr[i]
        return out

    def stable(self, mask):
        for i in items_of(mask):
            if self.nbr[i] & mask & ~(1 << i):
                return False
        return True

    def p_state(self):
        return self.later[0]

    def step(self, state, k, chosen):
        if chosen & ~state or not self.stable(chosen):
            return None
        return state & ~self.closed(chosen) & self.later[k]

    def valid(self, sj, sk, items):
        return self.stable(items) and items & ~sj == 0 and sk & ~(sj & ~self.closed(items)) == 0


class _SetCoverModel(_Model):
    state_kind = "elements"

    def __init__(self, instance, grouping):
        super().__init__(instance, grouping)
        f = instance.follower()
        self.sets = f.sets
        self.full = f.full
        self.coverable = [self.union(self.later[k]) for k in range(self.m + 1)]

    def union(self, mask):
        out = 0
        for i in items_of(mask):
            out |= self.sets[i]
        return out

    def p_state(self):
        return self.full

    def step(self, state, k, chosen):
        s = state & ~self.union(chosen)
        if s & ~self.coverable[k]:
            return None  # some element can no longer be covered
        return s

    def valid(self, sj, sk, items):
        return (sj & ~self.union(items)) & ~sk == 0


def dd_model(instance, grouping=None, cap=True):
    grouping = singleton_grouping(instance.n) if grouping is None else grouping
    prob = instance.problem
    if prob in ("kpp", "kip"):
        return _KnapsackModel(instance, grouping, cap=cap)
    if prob == "maxsspp":
        return _StableSetModel(instance, grouping)
    if prob == "minscpp":
        return _SetCoverModel(instance, grouping)
    raise ValueError(f"no decision diagram model for {prob!r}")


def _shell(model):
    return Diagram.empty(DECISION, model.instance.n, model.m + 1, model.p_state(), model.q_state,
                         grouping=model.groups, state_kind=model.state_kind)


# ----------------------------------------------------------------------
# operations

def dd_path_for_solution(instance, sol, grouping=None, model=None):
    """States along the path of ``sol`` at layers 0..m (the last one is q)."""
    model = dd_model(instance, grouping) if model is None else model
    x = sol.mask
    states = [model.p_state()]
    for k in range(1, model.m + 1):
        s = model.step(states[-1], k, x & model.gmask[k - 1])
        if s is None:
            raise ValueError("solution is infeasible for the decision diagram")
        states.append(s)
    if states[-1] != model.q_state:
        raise ValueError("solution path does not end at the terminal state")
    return states


def _insert_path(diagram, model, sol, states):
    nodes = [diagram.p]
    for k in range(1, model.m):
        nodes.append(diagram.add_node(k, states[k]))
    nodes.append(diagram.q)
    for k in range(1, model.m + 1):
        diagram.add_arc(nodes[k - 1], nodes[k], sol.mask & model.gmask[k - 1])


def dd_add_path(diagram, instance, sol, model=None):
    """Insert the full layer-by-layer path of ``sol`` (as the initial diagram does)."""
    model = getattr(diagram, "model", None) if model is None else model
    if model is None:
        model = dd_model(instance, diagram.grouping)
    _insert_path(diagram, model, sol, dd_path_for_solution(instance, sol, model=model))


def dd_init(instance, W, grouping=None, rng=None, model=None):
    """Union of the paths of ``W`` sampled follower solutions."""
    if W < 0:
        raise ValueError("width must be nonnegative")
    model = dd_model(instance, grouping) if model is None else model
    d = _shell(model)
    d.model = model
    prob = instance.follower()
    for _ in range(W):
        sol = prob.sample_solution(rng)
        _insert_path(d, model, sol, dd_path_for_solution(instance, sol, model=model))
    return d


def dd_valid_transition(model, sj, j, sk, k, items):
    """Membership test for a transition from layer j to layer k carrying ``items``."""
    if not j < k:
        return False
    if items & ~model.between(j, k):
        return False
    return model.valid(sj, sk, items)


def dd_transitions(diagram, model, sol):
    """All valid transitions between existing nodes that carry the matching items of ``sol``."""
    x = sol.mask
    nodes = diagram.nodes
    by_layer = {}
    for nd in nodes:
        by_layer.setdefault(nd.layer, []).append(nd.id)
    layers = sorted(by_layer)
    out = []
    for a, j in enumerate(layers):
        for k in layers[a + 1:]:
            items = x & model.between(j, k)
            for u in by_layer[j]:
                su = nodes[u].state
                for w in by_layer[k]:
                    if model.valid(su, nodes[w].state, items):
                        out.append((u, w, items))
    return out


def dd_add_solution(diagram, instance, sol, model=None):
    """Insert the longest (arc-count) path of valid transitions for ``sol``.

    Returns the list of newly created arcs; existing arcs are reused.
    """
    model = getattr(diagram, "model", None) if model is None else model
    if model is None:
        model = dd_model(instance, diagram.grouping)
    trans = dd_transitions(diagram, model, sol)
    succ = {}
    for u, w, items in trans:
        succ.setdefault(u, []).append((w, items))
    order = diagram.topo_order()
    cnt = {diagram.q: 0}
    for u in reversed(order):
        if u == diagram.q:
            continue
        best = -1
        for w, _ in succ.get(u, ()):
            if w in cnt and cnt[w] + 1 > best:
                best = cnt[w] + 1
        if best >= 0:
            cnt[u] = best
    u = diagram.p
    new = []
    while u != diagram.q:
        opts = [(w, items) for w, items in succ[u] if cnt.get(w, -2) == cnt[u] - 1]
        w, items = min(opts)
        a = diagram.add_arc(u, w, items)
        if a is not None:
            new.append(a)
        u = w
    return new


def dd_full(instance, grouping=None, simplify=True, max_nodes=100000):
    """Complete decision diagram by layer-wise state expansion.

    With ``simplify`` states are capped where later items are forced and
    dominated parallel arcs are dropped (an arc whose item set is contained in
    a parallel arc's set for maximizing followers, or contains one for
    minimizing followers).  Nodes without a path to q are removed.
    """
    model = dd_model(instance, grouping, cap=simplify)
    sense = instance.sense if instance.problem != "kip" else MAXIMIZE
    layers = [{model.p_state(): None}]
    edges = []  # (k, src_state, dst_state, items)
    total = 1
    for k in range(1, model.m + 1):
        g = model.groups[k - 1]
        nxt = {}
        for s in layers[-1]:
            for r in range(len(g) + 1):
                for comb in combinations(g, r):
                    K = mask_of(comb)
                    t = model.step(s, k, K)
                    if t is None:
                        continue
                    if k == model.m and t != model.q_state:
                        continue
                    nxt[t] = None
                    edges.append((k, s, t, K))
        total += len(nxt)
        if total > max_nodes:
            raise InstanceTooLarge("decision diagram too large")
        layers.append(nxt)
    if simplify:
        edges = _drop_dominated(edges, sense)
    # keep only states with a path to q
    alive = [set() for _ in range(model.m + 1)]
    alive[model.m].add(model.q_state)
    for k in range(model.m, 0, -1):
        for kk, s, t, K in edges:
            if kk == k and t in alive[k]:
                alive[k - 1].add(s)
    d = _shell(model)
    d.model = model
    for k in range(1, model.m):
        for s in sorted(alive[k], key=_state_key):
            d.add_node(k, s)
    for k, s, t, K in sorted(edges, key=lambda e: (e[0], _state_key(e[1]), _state_key(e[2]), e[3])):
        if s in alive[k - 1] and t in alive[k]:
            src = d.p if k == 1 else d.find_node(k - 1, s)
            dst = d.q if k == model.m else d.find_node(k, t)
            d.add_arc(src, dst, K)
    return d


def _state_key(s):
    return (0, s) if isinstance(s, int) else (1, str(s))


def _drop_dominated(edges, sense):
    groups = {}
    for e in edges:
        groups.setdefault((e[0], e[1], e[2]), []).append(e[3])
    out = []
    for (k, s, t), sets in groups.items():
        for K in sets:
            if sense == MAXIMIZE:
                dominated = any(K != L and K & ~L == 0 for L in sets)
            else:
                dominated = any(K != L and L & ~K == 0 for L in sets)
            if not dominated:
                out.append((k, s, t, K))
    return out
