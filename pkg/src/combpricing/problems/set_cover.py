"""Minimum-cost set cover follower (MinSCPP)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import FollowerInfeasible, FollowerProblem, FollowerSolution, MINIMIZE, TIE_TOL, mask_of


@dataclass(frozen=True)
class SetCoverData:
    n_elements: int
    sets: tuple
    element_weights: Optional[tuple] = None

    def __post_init__(self):
        sets = tuple(tuple(sorted(set(int(e) for e in s))) for s in self.sets)
        for s in sets:
            if any(e < 0 or e >= self.n_elements for e in s):
                raise ValueError("set element out of range")
        object.__setattr__(self, "sets", sets)
        if self.element_weights is not None:
            object.__setattr__(self, "element_weights", tuple(float(x) for x in self.element_weights))

    @property
    def masks(self):
        return [mask_of(s) for s in self.sets]

    @property
    def universe(self):
        return (1 << self.n_elements) - 1


class SetCoverFollower(FollowerProblem):
    """min cost.x over covers of the element universe."""

    sense = MINIMIZE

    def __init__(self, instance):
        super().__init__(instance)
        d = instance.payload
        if len(d.sets) != self.n:
            raise ValueError("set family size differs from item count")
        self.E = d.n_elements
        self.full = d.universe
        self.sets = d.masks
        covered = 0
        for s in self.sets:
            covered |= s
        if covered != self.full:
            raise ValueError("the set family does not cover every element")
        self.covering = [[i for i in range(self.n) if (self.sets[i] >> e) & 1] for e in range(self.E)]

    def union(self, mask):
        u = 0
        for i in range(self.n):
            if (mask >> i) & 1:
                u |= self.sets[i]
        return u

    def is_feasible(self, x):
        if isinstance(x, FollowerSolution):
            x = x.mask
        if not isinstance(x, (int, np.integer)):
            x = mask_of(np.flatnonzero(np.asarray(x) > 0.5))
        return self.union(int(x)) == self.full

    def feasible_masks_vec(self, masks):
        masks = np.asarray(masks, dtype=np.int64)
        ok = np.ones(len(masks), dtype=bool)
        for cov in self.covering:
            cmask = np.int64(mask_of(cov))
            ok &= (masks & cmask) != 0
        return ok

    # -- exact solver -------------------------------------------------
    def _solve_lex(self, profit, tiebreak, allowed=None, target=None):
        cost = np.asarray(profit, dtype=float)
        tb = np.asarray(tiebreak, dtype=float)
        allowed = (1 << self.n) - 1 if allowed is None else allowed
        target = self.full if target is None else target
        first = self._bb(cost, allowed, target, None)
        if first is None:
            return None
        cstar = first[1]
        sol = self._bb(cost, allowed, target, (cstar + TIE_TOL, tb, first))
        mask = sol[0]
        # free extras with positive tiebreak keep cost within tolerance
        for i in range(self.n):
            if (allowed >> i) & 1 and not (mask >> i) & 1 and cost[i] <= 1e-12 and tb[i] > 1e-12:
                mask |= 1 << i
        return mask

    def min_cover_cost(self, cost, allowed=None, target=None):
        """Cheapest cover of ``target`` using sets in ``allowed``; inf when impossible."""
        allowed = (1 << self.n) - 1 if allowed is None else allowed
        target = self.full if target is None else target
        res = self._bb(np.asarray(cost, dtype=float), allowed, target, None)
        return np.inf if res is None else res[1]

    def _bb(self, cost, allowed, target, stage2):
        sets, covering = self.sets, self.covering
        best = [None, np.inf, -np.inf]
        if stage2 is not None:
            ceiling, tb, inc = stage2
            best = [inc[0], inc[1], float(sum(tb[i] for i in range(self.n) if (inc[0] >> i) & 1))]

        def lower_bound(unc, avail):
            lb_max = 0.0
            lb_sum = 0.0
            e = 0
            u = unc
            while u:
                if u & 1:
                    m1 = np.inf
                    m2 = np.inf
                    for i in covering[e]:
                        if (avail >> i) & 1:
                            c = cost[i]
                            if c < m1:
                                m1 = c
                            k = bin(sets[i] & unc).count("1")
                            r = c / k
                            if r < m2:
                                m2 = r
                    if m1 == np.inf:
                        return np.inf
                    lb_max = max(lb_max, m1)
                    lb_sum += m2
                u >>= 1
                e += 1
            return max(lb_max, lb_sum)

        def rec(unc, avail, chosen, val, tval):
            if unc == 0:
                if stage2 is None:
                    if val < best[1]:
                        best[:] = [chosen, val, 0.0]
                elif val <= ceiling and tval > best[2] + 1e-12:
                    best[:] = [chosen, val, tval]
                return
            lb = val + lower_bound(unc, avail)
            if stage2 is None:
                if lb >= best[1] - 1e-12:
                    return
            else:
                if lb > ceiling:
                    return
                tub = tval + sum(max(tb[i], 0.0) for i in range(self.n) if (avail >> i) & 1)
                if tub <= best[2] + 1e-12:
                    return
            # branch on the uncovered element with fewest available covering sets
            pick, opts = None, None
            e = 0
            u = unc
            while u:
                if u & 1:
                    o = [i for i in covering[e] if (avail >> i) & 1]
                    if pick is None or len(o) < len(opts):
                        pick, opts = e, o
                u >>= 1
                e += 1
            opts.sort(key=lambda i: (cost[i], -bin(sets[i] & unc).count("1")))
            av = avail
            for i in opts:
                av &= ~(1 << i)
                rec(unc & ~sets[i], av, chosen | (1 << i), val + cost[i],
                    tval + (stage2[1][i] if stage2 else 0.0))

        rec(target, allowed, 0, 0.0, 0.0)
        if best[0] is None:
            return None
        return best[0], best[1]

    # -- sampling -----------------------------------------------------
    def sample_solution(self, rng):
        chosen = 0
        covered = 0
        for i in rng.permutation(self.n):
            i = int(i)
            if self.sets[i] & ~covered:
                chosen |= 1 << i
                covered |= self.sets[i]
            if covered == self.full:
                break
        if covered != self.full:
            raise FollowerInfeasible("no cover exists")
        return self._prune(chosen, rng.permutation(self.n))

    def _prune(self, chosen, order):
        for i in order:
            i = int(i)
            if (chosen >> i) & 1 and self.union(chosen & ~(1 << i)) == self.full:
                chosen &= ~(1 << i)
        return FollowerSolution(chosen, self.n)

    def complete(self, sol):
        """Drop redundant sets (highest index first) to reach a minimal cover."""
        return self._prune(sol.mask, range(self.n - 1, -1, -1))
