"""Maximum-weight stable set follower (MaxSSPP)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import FollowerProblem, FollowerSolution, TIE_TOL, mask_bits, mask_of


@dataclass(frozen=True)
class GraphData:
    n: int
    edges: tuple

    def __post_init__(self):
        es = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError("graph has a self-loop")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError("edge endpoint out of range")
            es.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", tuple(sorted(es)))

    @property
    def closed_nbr(self):
        """Per-node bitmask of the closed neighborhood N[i]."""
        nb = [1 << i for i in range(self.n)]
        for a, b in self.edges:
            nb[a] |= 1 << b
            nb[b] |= 1 << a
        return nb


def _clique_cover_bound(cand, order, weight, adj):
    """Greedy clique partition of ``cand``; sum of the heaviest weight per clique."""
    cliques = []  # (members mask, max weight)
    total = 0.0
    for i in order:
        if not (cand >> i) & 1:
            continue
        for k, (mem, _) in enumerate(cliques):
            if mem & ~adj[i] == 0:
                cliques[k] = (mem | (1 << i), cliques[k][1])
                break
        else:
            cliques.append((1 << i, weight[i]))
            total += weight[i]
    return total


class StableSetFollower(FollowerProblem):
    """max profit.x over stable sets of the graph."""

    def __init__(self, instance):
        super().__init__(instance)
        g = instance.payload
        if g.n != self.n:
            raise ValueError("graph size differs from item count")
        self.nbr = g.closed_nbr
        self.adj = [self.nbr[i] & ~(1 << i) for i in range(self.n)]
        self.edges = np.array(g.edges, dtype=np.int64).reshape(-1, 2)

    def is_feasible(self, x):
        if isinstance(x, FollowerSolution):
            x = x.mask
        if not isinstance(x, (int, np.integer)):
            x = mask_of(np.flatnonzero(np.asarray(x) > 0.5))
        x = int(x)
        return all(not ((x >> a) & 1 and (x >> b) & 1) for a, b in self.edges)

    def feasible_masks_vec(self, masks):
        masks = np.asarray(masks, dtype=np.int64)
        ok = np.ones(len(masks), dtype=bool)
        for a, b in self.edges:
            ok &= ~(((masks >> a) & 1).astype(bool) & ((masks >> b) & 1).astype(bool))
        return ok

    def _solve_lex(self, profit, tiebreak):
        profit = np.asarray(profit, dtype=float)
        tiebreak = np.asarray(tiebreak, dtype=float)
        usable = mask_of(i for i in range(self.n) if profit[i] >= -TIE_TOL)
        order = sorted(range(self.n), key=lambda i: -profit[i])
        pw = np.maximum(profit, 0.0)
        best = self._bb(usable, order, pw, profit, None, None)
        vstar = best[1]
        tw = np.maximum(tiebreak, 0.0)
        return self._bb(usable, order, pw, profit, (vstar - TIE_TOL, tiebreak, tw), best)[0]

    def _bb(self, usable, order, pw, profit, stage2, incumbent):
        """Stage 1 maximizes profit; stage 2 maximizes tiebreak with profit >= floor."""
        nbr, adj = self.nbr, self.adj
        if stage2 is None:
            best = [0, 0.0, 0.0]
        else:
            floor, tb, tw = stage2
            best = [incumbent[0], incumbent[1], float(sum(tb[i] for i in range(self.n) if (incumbent[0] >> i) & 1))]

        def rec(cand, chosen, val, tval):
            if stage2 is None:
                if val > best[1]:
                    best[:] = [chosen, val, 0.0]
            elif val >= floor and tval > best[2] + 1e-12:
                best[:] = [chosen, val, tval]
            if cand == 0:
                return
            ub = val + _clique_cover_bound(cand, order, pw, adj)
            if stage2 is None:
                if ub <= best[1] + 1e-12:
                    return
            else:
                if ub < floor:
                    return
                if tval + sum(tw[i] for i in range(self.n) if (cand >> i) & 1) <= best[2] + 1e-12:
                    return
            # branch on the heaviest remaining candidate
            for i in order:
                if (cand >> i) & 1:
                    break
            rec(cand & ~nbr[i], chosen | (1 << i), val + profit[i],
                tval + (stage2[1][i] if stage2 else 0.0))
            rec(cand & ~(1 << i), chosen, val, tval)

        rec(usable, 0, 0.0, 0.0)
        return best[0], best[1]

    def sample_solution(self, rng):
        chosen = 0
        blocked = 0
        for i in rng.permutation(self.n):
            i = int(i)
            if not (blocked >> i) & 1:
                chosen |= 1 << i
                blocked |= self.nbr[i]
        return FollowerSolution(chosen, self.n)

    def complete(self, sol):
        m = sol.mask
        blocked = 0
        for i in sol.items:
            blocked |= self.nbr[i]
        for i in range(self.n):
            if not (blocked >> i) & 1:
                m |= 1 << i
                blocked |= self.nbr[i]
        return FollowerSolution(m, self.n)
