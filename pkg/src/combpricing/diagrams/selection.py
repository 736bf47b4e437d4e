"""Selection diagrams: nodes are item subsets, arcs add one item at a time."""

from __future__ import annotations

from ..core import InstanceTooLarge
from .diagram import SELECTION, Diagram


def _sd_shell(instance, n_layers):
    return Diagram.empty(SELECTION, instance.n, n_layers, 0, "q", state_kind="subset")


def sd_init(instance, N, rng):
    """Initial diagram from ``N`` sampled pairs: layers empty set, singletons, pairs, q."""
    if N < 0:
        raise ValueError("number of pairs must be nonnegative")
    prob = instance.follower()
    singles, pairs = [], []
    for _ in range(N):
        items = prob.sample_solution(rng).items
        if len(items) < 2:
            singles.extend(items)
            continue
        a, b = rng.choice(len(items), size=2, replace=False)
        i, j = sorted((items[int(a)], items[int(b)]))
        singles.extend((i, j))
        pairs.append((i, j))
    d = _sd_shell(instance, 4)
    for i in sorted(set(singles)):
        d.add_node(1, 1 << i)
    for i, j in sorted(set(pairs)):
        d.add_node(2, (1 << i) | (1 << j))
    for k in (1, 2):
        for K in d.layer_nodes(k):
            for J in d.layer_nodes(k - 1):
                sj, sk = d.nodes[J].state, d.nodes[K].state
                if sj & ~sk == 0:
                    d.add_arc(J, K, sk & ~sj)
    return d


def sd_add_solution(diagram, sol, rng):
    """Connect the deepest node contained in ``sol`` to q by a modified terminal arc.

    Layers 2, 1, 0 are scanned in that order, nodes within a layer in random
    order.  Returns the new arc, or None if that exact arc already exists.
    """
    x = sol.mask
    for k in (2, 1, 0):
        layer = diagram.layer_nodes(k)
        if not layer:
            continue
        for idx in rng.permutation(len(layer)):
            J = layer[int(idx)]
            s = diagram.nodes[J].state
            if s & ~x == 0:
                return diagram.add_arc(J, diagram.q, x & ~s)
    raise AssertionError("layer 0 must contain the empty set")


def sd_full(instance, max_nodes=200000):
    """Complete selection diagram over the extremal follower solutions."""
    prob = instance.follower()
    ext = [int(m) for m in prob.extremal_masks()]
    subsets = set()
    for m in ext:
        sub = m
        while True:
            subsets.add(sub)
            if len(subsets) > max_nodes:
                raise InstanceTooLarge("selection diagram too large")
            if sub == 0:
                break
            sub = (sub - 1) & m
    depth = max((bin(m).count("1") for m in ext), default=0)
    d = _sd_shell(instance, depth + 2)
    for s in sorted(subsets, key=lambda m: (bin(m).count("1"), m)):
        d.add_node(bin(s).count("1"), s)
    for K in range(d.num_nodes):
        if K == d.q:
            continue
        sk = d.nodes[K].state
        rest = sk
        while rest:
            low = rest & -rest
            rest ^= low
            J = d.find_node(d.nodes[K].layer - 1, sk & ~low)
            d.add_arc(J, K, low)
    for m in ext:
        d.add_arc(d.find_node(bin(m).count("1"), m), d.q, 0)
    return d


def subset_node_name(state):
    return "{" + ",".join(str(i + 1) for i in range(state.bit_length()) if (state >> i) & 1) + "}"

