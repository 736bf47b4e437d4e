"""Knapsack follower (KPP) and the interdiction inner knapsack."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import FollowerProblem, FollowerSolution, mask_bits, mask_of

_DP_TOL = 1e-9


@dataclass(frozen=True)
class KnapsackData:
    w: tuple
    C: int

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(int(x) for x in self.w))
        object.__setattr__(self, "C", int(self.C))
        if self.C < 0 or any(x < 0 for x in self.w):
            raise ValueError("knapsack weights and capacity must be nonnegative")


@dataclass(frozen=True)
class KipData:
    v: tuple
    w: tuple
    c: int
    W: tuple
    C: int

    def __post_init__(self):
        for name in ("v", "w", "W"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))
        object.__setattr__(self, "c", int(self.c))
        object.__setattr__(self, "C", int(self.C))
        if not len(self.v) == len(self.w) == len(self.W):
            raise ValueError("KIP vectors must have equal length")
        if min(self.v + self.w + self.W + (self.c, self.C), default=0) < 0:
            raise ValueError("KIP data must be nonnegative")


def knapsack_value(profit, w, C):
    """Optimal 0/1 knapsack value by DP over capacity (items with profit <= 0 ignored)."""
    dp = np.zeros(int(C) + 1)
    for p, wi in zip(profit, w):
        if p <= 0 or wi > C:
            continue
        if wi == 0:
            dp += p
            continue
        cand = dp[:-wi] + p
        dp[wi:] = np.maximum(dp[wi:], cand)
    return float(dp[-1])


def knapsack_lex(profit, tiebreak, w, C):
    """Maximize profit.x then tiebreak.x over the knapsack; returns a bitmask."""
    n = len(w)
    C = int(C)
    val = np.zeros(C + 1)
    tb = np.zeros(C + 1)
    take = np.zeros((n, C + 1), dtype=bool)
    for i in range(n):
        wi = int(w[i])
        p, b = profit[i], tiebreak[i]
        if p < -_DP_TOL or wi > C:
            continue
        if wi == 0:
            nv, nt = val + p, tb + b
            better = (nv > val + _DP_TOL) | ((nv >= val - _DP_TOL) & (nt > tb + _DP_TOL))
            val = np.where(better, nv, val)
            tb = np.where(better, nt, tb)
            take[i] = better
            continue
        nv = val[:-wi] + p
        nt = tb[:-wi] + b
        cv, ct = val[wi:], tb[wi:]
        better = (nv > cv + _DP_TOL) | ((nv >= cv - _DP_TOL) & (nt > ct + _DP_TOL))
        take[i, wi:] = better
        val[wi:] = np.where(better, nv, cv)
        tb[wi:] = np.where(better, nt, ct)
    mask = 0
    c = C
    for i in range(n - 1, -1, -1):
        if take[i, c]:
            mask |= 1 << i
            c -= int(w[i])
    return mask


class KnapsackFollower(FollowerProblem):
    """max profit.x  s.t.  w.x <= C."""

    def __init__(self, instance, w=None, C=None):
        super().__init__(instance)
        d = instance.payload
        self.w = np.asarray(d.w if w is None else w, dtype=np.int64)
        self.C = int(d.C if C is None else C)
        if len(self.w) != self.n:
            raise ValueError("weight vector length differs from item count")

    def is_feasible(self, x):
        if isinstance(x, FollowerSolution):
            x = x.mask
        if isinstance(x, (int, np.integer)):
            return bool(self.feasible_masks_vec(np.array([x]))[0])
        return bool(np.asarray(x) @ self.w <= self.C)

    def feasible_masks_vec(self, masks):
        return mask_bits(masks, self.n) @ self.w <= self.C

    def _solve_lex(self, profit, tiebreak):
        return knapsack_lex(profit, tiebreak, self.w, self.C)

    def sample_solution(self, rng):
        order = rng.permutation(self.n)
        room = self.C
        chosen = []
        for i in order:
            if self.w[i] <= room:
                chosen.append(int(i))
                room -= int(self.w[i])
        return FollowerSolution(mask_of(chosen), self.n)

    def complete(self, sol):
        """Extend ``sol`` to a maximal solution, adding items in index order."""
        room = self.C - int(sum(self.w[i] for i in sol.items))
        m = sol.mask
        for i in range(self.n):
            if not (m >> i) & 1 and self.w[i] <= room:
                m |= 1 << i
                room -= int(self.w[i])
        return FollowerSolution(m, self.n)


class KipFollower(KnapsackFollower):
    """Inner knapsack of the interdiction game; profits are ``v_i (1 - t_i)``."""

    def __init__(self, instance):
        d = instance.payload
        super().__init__(instance, w=d.w, C=d.c)

    def follower_profit(self, t):
        return self.v * (1.0 - np.asarray(t, dtype=float))
