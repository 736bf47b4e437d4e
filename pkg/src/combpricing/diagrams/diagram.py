"""Layered multigraph shared by value-function, selection and decision diagrams."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import MAXIMIZE, PricingError, items_of, mask_bits

VF = "value-function"
SELECTION = "selection"
DECISION = "decision"


class NoTerminalPath(PricingError):
    pass


@dataclass
class Node:
    id: int
    layer: int
    state: object


@dataclass(frozen=True)
class Arc:
    id: int
    src: int
    dst: int
    items: int  # bitmask

    @property
    def item_list(self):
        return items_of(self.items)


@dataclass
class Diagram:
    kind: str
    n_items: int
    n_layers: int  # number of layers, q sits in layer n_layers - 1
    nodes: list = field(default_factory=list)
    arcs: list = field(default_factory=list)
    p: int = 0
    q: int = 1
    grouping: Optional[list] = None
    state_kind: str = "plain"  # subset | capacity | items | elements | plain

    def __post_init__(self):
        self._index = {}
        self._keys = set()
        self.out_arcs = {}
        self.in_arcs = {}

    # -- construction ---------------------------------------------------
    @classmethod
    def empty(cls, kind, n_items, n_layers, p_state, q_state, grouping=None, state_kind="plain"):
        d = cls(kind, n_items, n_layers, grouping=grouping, state_kind=state_kind)
        d.p = d.add_node(0, p_state)
        d.q = d.add_node(n_layers - 1, q_state)
        return d

    def add_node(self, layer, state):
        key = (layer, state)
        if key in self._index:
            return self._index[key]
        nid = len(self.nodes)
        self.nodes.append(Node(nid, layer, state))
        self._index[key] = nid
        self.out_arcs[nid] = []
        self.in_arcs[nid] = []
        return nid

    def find_node(self, layer, state):
        return self._index.get((layer, state))

    def add_arc(self, src, dst, items):
        """Insert an arc unless an identical one exists; returns the new arc or None."""
        items = int(items)
        key = (src, dst, items)
        if key in self._keys:
            return None
        if self.nodes[src].layer >= self.nodes[dst].layer:
            raise ValueError("arcs must go from a lower to a strictly higher layer")
        a = Arc(len(self.arcs), src, dst, items)
        self.arcs.append(a)
        self._keys.add(key)
        self.out_arcs[src].append(a)
        self.in_arcs[dst].append(a)
        return a

    def has_arc(self, src, dst, items):
        return (src, dst, int(items)) in self._keys

    def layer_nodes(self, k):
        return [nd.id for nd in self.nodes if nd.layer == k]

    @property
    def num_nodes(self):
        return len(self.nodes)

    def topo_order(self):
        return sorted(range(len(self.nodes)), key=lambda i: (self.nodes[i].layer, i))

    def copy(self):
        d = Diagram.empty(self.kind, self.n_items, self.n_layers, self.nodes[self.p].state,
                          self.nodes[self.q].state, grouping=self.grouping, state_kind=self.state_kind)
        for nd in self.nodes:
            d.add_node(nd.layer, nd.state)
        for a in self.arcs:
            d.add_arc(a.src, a.dst, a.items)
        return d

    # -- evaluation -----------------------------------------------------
    def arc_weights(self, item_weights):
        """Sum of ``item_weights`` over each arc's items, vectorized."""
        if not self.arcs:
            return np.zeros(0)
        masks = np.array([a.items for a in self.arcs], dtype=object)
        if self.n_items <= 62:
            bits = mask_bits(masks.astype(np.int64), self.n_items)
            return bits @ np.asarray(item_weights, dtype=float)
        w = np.asarray(item_weights, dtype=float)
        return np.array([w[list(items_of(int(m)))].sum() for m in masks])

    def reaches_q(self):
        ok = np.zeros(len(self.nodes), dtype=bool)
        ok[self.q] = True
        for u in reversed(self.topo_order()):
            if any(ok[a.dst] for a in self.out_arcs[u]):
                ok[u] = True
        return ok

    def longest_path(self, item_weights, sense=MAXIMIZE):
        """Best p->q path under additive item weights (longest for max, shortest for min).

        Returns ``(value, [arcs])``; raises NoTerminalPath when q is unreachable.
        """
        lens = self.arc_weights(item_weights)
        sign = 1.0 if sense == MAXIMIZE else -1.0
        best = np.full(len(self.nodes), -np.inf)
        choice = [None] * len(self.nodes)
        best[self.q] = 0.0
        for u in reversed(self.topo_order()):
            if u == self.q:
                continue
            for a in self.out_arcs[u]:
                if best[a.dst] == -np.inf:
                    continue
                val = sign * lens[a.id] + best[a.dst]
                if val > best[u] + 1e-12:
                    best[u] = val
                    choice[u] = a
        if best[self.p] == -np.inf:
            raise NoTerminalPath("no path from p to q")
        path = []
        u = self.p
        while u != self.q:
            a = choice[u]
            path.append(a)
            u = a.dst
        return sign * best[self.p], path

    def paths_to_masks(self, limit=None):
        """Item unions of all p->q paths (deduplicated)."""
        out = set()
        stack = [(self.p, 0)]
        while stack:
            u, m = stack.pop()
            if u == self.q:
                out.add(m)
                if limit and len(out) >= limit:
                    break
                continue
            for a in self.out_arcs[u]:
                stack.append((a.dst, m | a.items))
        return out

    def random_path(self, rng):
        """Uniformly chosen outgoing arc at each step among those that reach q."""
        ok = self.reaches_q()
        if not ok[self.p]:
            raise NoTerminalPath("no path from p to q")
        u, path = self.p, []
        while u != self.q:
            opts = [a for a in self.out_arcs[u] if ok[a.dst]]
            a = opts[int(rng.integers(len(opts)))]
            path.append(a)
            u = a.dst
        return path

    # -- export -----------------------------------------------------------
    def state_label(self, nid):
        nd = self.nodes[nid]
        if nid == self.p:
            return "p"
        if nid == self.q:
            return "q"
        s = nd.state
        if self.state_kind in ("subset", "items"):
            return "{" + ",".join(str(i + 1) for i in items_of(s)) + "}"
        if self.state_kind == "elements":
            return "{" + ",".join(f"e{i}" for i in items_of(s)) + "}"
        return str(s)


def arc_length(arc, t, instance, kind="cpp"):
    """Length of ``arc`` under tolls ``t``: v - t (max), v + t (min), or v - v t (interdiction)."""
    v = instance.v
    items = list(arc.item_list)
    t = np.asarray(t, dtype=float)
    if kind == "kip" or instance.problem == "kip":
        return float(np.sum(v[items] - v[items] * t[items]))
    if instance.sense == MAXIMIZE:
        return float(np.sum(v[items] - t[items]))
    return float(np.sum(v[items] + t[items]))


def item_lengths(instance, t):
    """Per-item arc contributions for tolls ``t``."""
    t = np.asarray(t, dtype=float)
    v = instance.v
    if instance.problem == "kip":
        return v - v * t
    return v - t if instance.sense == MAXIMIZE else v + t


def diagram_longest_path(diagram, instance, t):
    return diagram.longest_path(item_lengths(instance, t), instance.sense)


def vf_diagram(instance):
    """Two-node diagram p -> q; each added solution becomes one arc."""
    return Diagram.empty(VF, instance.n, 2, "p", "q")


def export_dot(diagram):
    """Deterministic DOT text: nodes ordered by (layer, id), one edge line per arc."""
    lines = [f'digraph "{diagram.kind}" {{', "  rankdir=LR;"]
    order = diagram.topo_order()
    for nid in order:
        nd = diagram.nodes[nid]
        lines.append(f'  n{nid} [label="{diagram.state_label(nid)}", layer={nd.layer}];')
    for nid in order:
        for a in sorted(diagram.out_arcs[nid], key=lambda a: (diagram.nodes[a.dst].layer, a.dst, a.items)):
            lab = "{" + ",".join(str(i + 1) for i in a.item_list) + "}"
            lines.append(f'  n{a.src} -> n{a.dst} [label="{lab}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
