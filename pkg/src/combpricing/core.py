"""Shared domain types, the follower contract and brute-force bilevel oracles."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

MAXIMIZE = "max"
MINIMIZE = "min"

TIE_TOL = 1e-6
ENUM_LIMIT = 20  # largest n for which follower problems enumerate their solutions


class PricingError(Exception):
    pass


class FollowerInfeasible(PricingError):
    pass


class InstanceTooLarge(PricingError):
    pass


class ConfigError(PricingError, ValueError):
    pass


# ----------------------------------------------------------------------
# item sets

def mask_of(items) -> int:
    m = 0
    for i in items:
        m |= 1 << int(i)
    return m


def items_of(mask: int) -> tuple:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def mask_bits(masks, n):
    """Boolean matrix (len(masks), n) of membership."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def all_masks(n):
    return np.arange(1 << n, dtype=np.int64)


@dataclass(frozen=True)
class FollowerSolution:
    mask: int
    n: int

    @classmethod
    def from_items(cls, items, n):
        return cls(mask_of(items), n)

    @classmethod
    def from_array(cls, x, n=None):
        x = np.asarray(x)
        return cls(mask_of(np.flatnonzero(np.round(x) > 0.5)), len(x) if n is None else n)

    @property
    def items(self):
        return items_of(self.mask)

    def to_array(self):
        x = np.zeros(self.n)
        x[list(self.items)] = 1.0
        return x

    def __contains__(self, i):
        return bool(self.mask >> int(i) & 1)

    def __len__(self):
        return bin(self.mask).count("1")

    def __repr__(self):
        return f"FollowerSolution({set(self.items) or '{}'})"


# ----------------------------------------------------------------------
# instances

@dataclass
class PricingInstance:
    """A pricing instance: base values, tolled items and the follower payload."""

    problem: str
    v: np.ndarray
    tolled: tuple
    payload: object
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float)
        self.tolled = tuple(sorted(int(i) for i in self.tolled))
        if any(i < 0 or i >= self.n for i in self.tolled) or len(set(self.tolled)) != len(self.tolled):
            raise ValueError("tolled indices out of range or repeated")
        if np.any(self.v < 0):
            raise ValueError("base values must be nonnegative")
        self._follower = None

    @property
    def n(self):
        return len(self.v)

    @property
    def tollfree(self):
        s = set(self.tolled)
        return tuple(i for i in range(self.n) if i not in s)

    @property
    def tolled_mask(self):
        return mask_of(self.tolled)

    @property
    def tolled_bool(self):
        b = np.zeros(self.n, dtype=bool)
        b[list(self.tolled)] = True
        return b

    @property
    def sense(self):
        return self.follower().sense

    def follower(self) -> "FollowerProblem":
        if self._follower is None:
            from .problems import make_follower
            self._follower = make_follower(self)
        return self._follower

    def tolls(self, t) -> np.ndarray:
        """Full toll vector from an array over all items or a dict ``{item: toll}``."""
        out = np.zeros(self.n)
        if isinstance(t, dict):
            for i, val in t.items():
                out[int(i)] = val
        else:
            out[:] = np.asarray(t, dtype=float)
        if np.any(out < -1e-9):
            raise ValueError("tolls must be nonnegative")
        if np.any(np.abs(out[~self.tolled_bool]) > 1e-12):
            raise ValueError("toll-free items cannot carry a toll")
        return np.maximum(out, 0.0)

    def __eq__(self, other):
        if not isinstance(other, PricingInstance):
            return NotImplemented
        return (self.problem == other.problem and np.array_equal(self.v, other.v)
                and self.tolled == other.tolled and self.payload == other.payload)


# ----------------------------------------------------------------------
# results

@dataclass
class SolveStats:
    total_time: float = 0.0
    callback_time: float = 0.0
    callback_calls: int = 0
    bb_nodes: int = 0
    cuts_added: int = 0
    iterations: int = 0


@dataclass
class SolveResult:
    status: str
    tolls: Optional[np.ndarray]
    response: Optional[FollowerSolution]
    revenue: float
    bound: float
    gap: float
    stats: SolveStats = field(default_factory=SolveStats)
    objective: Optional[float] = None  # KIP reports the follower value here
    extra: dict = field(default_factory=dict)

    @property
    def value(self):
        return self.revenue if self.objective is None else self.objective


# ----------------------------------------------------------------------
# follower contract

class FollowerProblem(ABC):
    """A combinatorial follower over ``n`` items with base values ``v``."""

    sense = MAXIMIZE
    is_monotone = True

    def __init__(self, instance: PricingInstance):
        self.instance = instance
        self.n = instance.n
        self.v = instance.v
        self._cache = {}

    # -- feasibility ---------------------------------------------------
    @abstractmethod
    def is_feasible(self, x) -> bool:
        """``x`` is a bitmask or 0/1 array."""

    @abstractmethod
    def feasible_masks_vec(self, masks: np.ndarray) -> np.ndarray:
        """Vectorized feasibility over an array of bitmasks."""

    @abstractmethod
    def _solve_lex(self, profit, tiebreak):
        """Exact lexicographic optimum without enumeration: returns a bitmask."""

    @abstractmethod
    def sample_solution(self, rng) -> FollowerSolution:
        """A random feasible solution; maximal (minimal) when monotone."""

    # -- enumeration ---------------------------------------------------
    def _feasible_all(self):
        if "feas" not in self._cache:
            if self.n > ENUM_LIMIT:
                raise InstanceTooLarge(f"cannot enumerate {self.n} items")
            masks = all_masks(self.n)
            self._cache["feas"] = masks[self.feasible_masks_vec(masks)]
        return self._cache["feas"]

    def enumerate_solutions(self, max_count=None):
        feas = self._feasible_all()
        if max_count is not None and len(feas) > max_count:
            raise InstanceTooLarge(f"{len(feas)} feasible solutions exceed cap {max_count}")
        return [FollowerSolution(int(m), self.n) for m in feas]

    def extremal_masks(self):
        """Inclusion-maximal feasible masks (maximize) or inclusion-minimal (minimize)."""
        if "ext" not in self._cache:
            feas = self._feasible_all()
            flag = np.zeros(1 << self.n, dtype=bool)
            flag[feas] = True
            keep = np.ones(len(feas), dtype=bool)
            for i in range(self.n):
                bit = np.int64(1) << i
                if self.sense == MAXIMIZE:
                    out = (feas & bit) == 0
                    keep &= ~(out & flag[feas | bit])
                else:
                    inn = (feas & bit) != 0
                    keep &= ~(inn & flag[feas & ~bit])
            self._cache["ext"] = feas[keep]
        return self._cache["ext"]

    def extremal_solutions(self):
        return [FollowerSolution(int(m), self.n) for m in self.extremal_masks()]

    def _bits(self, key):
        ck = "bits_" + key
        if ck not in self._cache:
            masks = self.extremal_masks() if key == "ext" else self._feasible_all()
            self._cache[ck] = (masks, mask_bits(masks, self.n).astype(float))
        return self._cache[ck]

    # -- optimization --------------------------------------------------
    def value(self, x, profit):
        return float(np.asarray(profit) @ _as_array(x, self.n))

    def best_response(self, profit, tiebreak=None):
        """Optimal solution for ``profit`` (max or min per sense); ties favor larger tiebreak.x."""
        profit = np.asarray(profit, dtype=float)
        tiebreak = np.zeros(self.n) if tiebreak is None else np.asarray(tiebreak, dtype=float)
        if self.n <= ENUM_LIMIT and ("feas" in self._cache or self.n <= 16):
            mask = self._enum_lex(profit, tiebreak)
        else:
            mask = self._solve_lex(profit, tiebreak)
        if mask is None:
            raise FollowerInfeasible("follower problem has no feasible solution")
        sol = FollowerSolution(int(mask), self.n)
        return sol, self.value(sol, profit)

    def _enum_lex(self, profit, tiebreak):
        # extremal solutions suffice when every item helps (or is free) under both criteria
        if self.sense == MAXIMIZE:
            use_ext = self.is_monotone and np.all(profit >= -1e-12) and np.all(tiebreak >= 0)
        else:
            use_ext = self.is_monotone and np.all(profit >= 0) and np.all(
                (tiebreak <= 1e-12) | (profit > 1e-12))
        masks, bits = self._bits("ext" if use_ext else "feas")
        if len(masks) == 0:
            return None
        vals = bits @ profit
        if self.sense == MAXIMIZE:
            best = vals.max()
            near = vals >= best - TIE_TOL
        else:
            best = vals.min()
            near = vals <= best + TIE_TOL
        idx = np.flatnonzero(near)
        tb = bits[idx] @ tiebreak
        k = idx[np.argmax(tb)]
        return int(masks[k])

    def follower_profit(self, t):
        t = np.asarray(t, dtype=float)
        return self.v - t if self.sense == MAXIMIZE else self.v + t

    def better(self, a, b, eps=TIE_TOL):
        """True when follower value ``a`` is strictly better than ``b`` by more than eps."""
        return a > b + eps if self.sense == MAXIMIZE else a < b - eps


def _as_array(x, n):
    if isinstance(x, FollowerSolution):
        return x.to_array()
    if isinstance(x, (int, np.integer)):
        return mask_bits([int(x)], n)[0].astype(float)
    return np.asarray(x, dtype=float)


def optimistic_best_response(problem: FollowerProblem, t):
    """Follower-optimal response to tolls ``t`` that maximizes leader revenue among ties.

    Returns ``(solution, follower_value, revenue)``.
    """
    t = np.asarray(t, dtype=float)
    sol, val = problem.best_response(problem.follower_profit(t), t)
    return sol, val, float(t @ sol.to_array())


# ----------------------------------------------------------------------
# oracles

def _exact_lp_max(c, A, b):
    """max c.x s.t. A x <= b, x >= 0 in rationals (two-phase, Bland's rule).

    Returns ``(value, x)`` or ``None`` when infeasible.  Assumes boundedness.
    """
    m, n = len(A), len(c)
    # rows with negative rhs get an artificial variable after sign flip
    neg = [i for i in range(m) if b[i] < 0]
    n_art = len(neg)
    width = n + m + n_art
    T = []
    basis = []
    for i in range(m):
        sgn = -1 if b[i] < 0 else 1
        row = [Fraction(sgn) * Fraction(A[i][j]) for j in range(n)]
        row += [Fraction(sgn if k == i else 0) for k in range(m)]
        row += [Fraction(1 if (b[i] < 0 and neg.index(i) == k) else 0) for k in range(n_art)]
        row.append(Fraction(sgn) * Fraction(b[i]))
        T.append(row)
        basis.append(n + m + neg.index(i) if b[i] < 0 else n + i)

    def run(obj):
        # obj: list of length width (maximize); reduced row computed from basis
        while True:
            z = [obj[j] - sum(obj[basis[r]] * T[r][j] for r in range(m)) for j in range(width)]
            enter = next((j for j in range(width) if z[j] > 0 and allowed[j]), None)
            if enter is None:
                return
            best, leave = None, None
            for r in range(m):
                if T[r][enter] > 0:
                    ratio = T[r][-1] / T[r][enter]
                    if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                        best, leave = ratio, r
            if leave is None:
                raise ValueError("unbounded exact LP")
            piv = T[leave][enter]
            T[leave] = [a / piv for a in T[leave]]
            for r in range(m):
                if r != leave and T[r][enter] != 0:
                    f = T[r][enter]
                    T[r] = [a - f * p for a, p in zip(T[r], T[leave])]
            basis[leave] = enter

    allowed = [True] * width
    if n_art:
        run([Fraction(0)] * (n + m) + [Fraction(-1)] * n_art)
        if any(basis[r] >= n + m and T[r][-1] != 0 for r in range(m)):
            return None
        for j in range(n + m, width):
            allowed[j] = False
    run([Fraction(x) for x in c] + [Fraction(0)] * (m + n_art))
    x = [Fraction(0)] * n
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = T[r][-1]
    return sum(Fraction(ci) * xi for ci, xi in zip(c, x)), x


def _candidate_rows(x_mask, comp_masks, v, tolled_mask, sense):
    """Packing rows ``sum_{S} t <= rhs`` that make ``x`` dominate every competitor."""
    x = np.int64(x_mask)
    c = np.asarray(comp_masks, dtype=np.int64)
    tol = np.int64(tolled_mask)
    n = len(v)
    x_minus = x & ~c
    c_minus = c & ~x
    vx = mask_bits(x_minus, n) @ v
    if sense == MAXIMIZE:
        rhs = vx - mask_bits(c_minus & ~tol, n) @ v
    else:
        rhs = mask_bits(c_minus, n) @ v - vx
    S = x_minus & tol
    order = np.lexsort((rhs, S))
    S, rhs = S[order], rhs[order]
    first = np.ones(len(S), dtype=bool)
    first[1:] = S[1:] != S[:-1]
    return S[first], rhs[first]


def brute_force_cpp(instance: PricingInstance, M=None, exact=False, max_solutions=200000):
    """Exact bilevel optimum by enumerating follower responses.

    For every candidate response ``x`` an LP chooses the tolls on ``x`` that
    maximize revenue while keeping ``x`` optimal; tolls on tolled items outside
    ``x`` are set high enough to make them unattractive.
    """
    from scipy.optimize import linprog

    prob = instance.follower()
    n = instance.n
    if n > ENUM_LIMIT:
        raise InstanceTooLarge(f"instance too large for oracle (n={n})")
    sense = prob.sense
    v = instance.v
    if M is None:
        # t_i <= v_i is necessary for a max-sense follower to keep item i; for
        # min-sense followers the toll-free cover competitor bounds the LP
        M = v.copy() if sense == MAXIMIZE else np.full(n, np.inf)
    M = np.asarray(M, dtype=float)
    feas = prob._feasible_all()
    if len(feas) > max_solutions:
        raise InstanceTooLarge("instance too large for oracle")
    tol_mask = instance.tolled_mask
    if sense == MAXIMIZE and prob.is_monotone:
        candidates = prob.extremal_masks()
        competitors = candidates
    else:
        candidates = feas
        competitors = None

    tolled = np.array(instance.tolled, dtype=int)
    best = (0.0, None, None)
    if len(tolled) == 0 or len(candidates) == 0:
        return _oracle_result(instance, prob, best, candidates)
    cand_bits = mask_bits(candidates, n)
    ub = cand_bits[:, tolled] @ np.where(np.isfinite(M[tolled]), M[tolled], 1e300)
    order = np.argsort(-ub, kind="stable")
    for k in order:
        if ub[k] <= best[0] + 1e-12:
            break
        xm = int(candidates[k])
        if xm & tol_mask == 0:
            continue
        if competitors is None:
            comp = feas[(feas & (tol_mask & ~xm)) == 0]
        else:
            comp = competitors
        S, rhs = _candidate_rows(xm, comp, v, tol_mask, sense)
        empty = S == 0
        if np.any(rhs[empty] < -1e-9):
            continue
        S, rhs = S[~empty], rhs[~empty]
        cols = [i for i in items_of(xm & tol_mask)]
        A = mask_bits(S, n)[:, cols].astype(float) if len(S) else np.zeros((0, len(cols)))
        bounds = [(0.0, M[i] if np.isfinite(M[i]) else None) for i in cols]
        if exact:
            capped = [k2 for k2, i in enumerate(cols) if np.isfinite(M[i])]
            rows = [list(r) for r in A.astype(int)] + [[1 if j == k2 else 0 for j in range(len(cols))]
                                                      for k2 in capped]
            rh = [Fraction(float(r)) for r in rhs] + [Fraction(float(M[cols[k2]])) for k2 in capped]
            res = _exact_lp_max([1] * len(cols), rows, rh)
            if res is None:
                continue
            val, tv = res
            if val > best[0]:
                best = (val, xm, np.array([float(a) for a in tv]), )
            continue
        res = linprog(-np.ones(len(cols)), A_ub=A if len(S) else None, b_ub=rhs if len(S) else None,
                      bounds=bounds, method="highs")
        if res.status == 3:
            raise PricingError("revenue unbounded: the toll-free items admit no follower solution")
        if res.status != 0:
            continue
        val = -res.fun
        if val > best[0] + 1e-12:
            best = (val, xm, res.x)
    if best[1] is not None:
        best = best + (cols_of(best[1], tol_mask),)
    return _oracle_result(instance, prob, best, candidates)


def cols_of(xm, tol_mask):
    return list(items_of(xm & tol_mask))


def _oracle_result(instance, prob, best, candidates):
    n = instance.n
    t = np.zeros(n)
    val, xm = best[0], best[1]
    if xm is None:
        # revenue zero: any follower optimum at t = 0 will do
        sol, _, _ = optimistic_best_response(prob, t)
        return SolveResult("optimal", t, sol, 0.0, 0.0, 0.0, extra={"candidates": len(candidates)})
    tv, cols = best[2], best[3]
    t[cols] = tv
    outside = [i for i in instance.tolled if not (xm >> i) & 1]
    if prob.sense == MAXIMIZE:
        t[outside] = instance.v[outside]
    else:
        t[outside] = float((instance.v + t) @ mask_bits([xm], n)[0]) + 1.0
    rev = float(val)
    return SolveResult("optimal", t, FollowerSolution(xm, n), rev, rev, 0.0,
                       extra={"candidates": len(candidates), "exact_revenue": val})


def brute_force_kip(instance: PricingInstance, max_n=20):
    """Exact knapsack interdiction optimum by enumerating leader interdictions."""
    d = instance.payload
    n = instance.n
    if n > max_n:
        raise InstanceTooLarge(f"instance too large for oracle (n={n})")
    W = np.asarray(d.W, dtype=np.int64)
    masks = all_masks(n)
    bits = mask_bits(masks, n)
    ok = bits @ W <= d.C
    from .problems.knapsack import knapsack_value
    v = np.asarray(d.v, dtype=float)
    best_val, best_t = np.inf, None
    for m, b in zip(masks[ok], bits[ok]):
        val = knapsack_value(np.where(b, 0.0, v), d.w, d.c)
        if val < best_val - 1e-9:
            best_val, best_t = val, b.astype(float)
    prob = instance.follower()
    sol, _ = prob.best_response(v * (1 - best_t))
    return SolveResult("optimal", best_t, sol, 0.0, best_val, 0.0, objective=float(best_val))
