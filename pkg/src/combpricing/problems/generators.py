"""Seeded random instance generators."""

from __future__ import annotations

import numpy as np

from ..core import PricingInstance
from .knapsack import KipData, KnapsackData
from .set_cover import SetCoverData
from .stable_set import GraphData


def _pick_tolled(rng, n, k):
    return tuple(sorted(int(i) for i in rng.choice(n, size=k, replace=False)))


def generate_kpp(n, r, seed):
    """Knapsack pricing instance; capacity and tolled share both equal ``r``."""
    if n < 2 or not 0 < r < 1:
        raise ValueError("need n >= 2 and 0 < r < 1")
    rng = np.random.default_rng(seed)
    w = rng.integers(1, 101, size=n)
    density = rng.uniform(0.75, 1.25, size=n)
    v = w * density
    tolled = _pick_tolled(rng, n, int(round(r * n)))
    v[list(tolled)] *= 2.0
    C = int(round(r * w.sum()))
    meta = {"generator": "kpp", "n": n, "r": r, "seed": seed}
    return PricingInstance("kpp", np.round(v), tolled, KnapsackData(tuple(w), C), meta)


def generate_maxsspp(n, d, seed, tolled_share=0.4):
    """Stable set pricing instance on an Erdos-Renyi graph with edge probability ``d``."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    present = rng.random(len(iu)) < d
    edges = tuple(zip(iu[present].tolist(), ju[present].tolist()))
    v = rng.uniform(50, 150, size=n)
    tolled = _pick_tolled(rng, n, int(round(tolled_share * n)))
    v[list(tolled)] *= 1.3
    meta = {"generator": "maxsspp", "n": n, "d": d, "seed": seed}
    return PricingInstance("maxsspp", np.round(v), tolled, GraphData(n, edges), meta)


def generate_minscpp(n_sets, ratio, seed, n_elements=None, tolled_share=0.28, p=0.23):
    """Set cover pricing instance whose toll-free sets always cover the universe."""
    rng = np.random.default_rng(seed)
    E = int(round(n_sets / ratio)) if n_elements is None else int(n_elements)
    we = rng.uniform(50, 85, size=E)
    inc = rng.random((n_sets, E)) < p
    for e in np.flatnonzero(~inc.any(axis=0)):
        inc[rng.integers(n_sets), e] = True
    for i in np.flatnonzero(~inc.any(axis=1)):
        inc[i, rng.integers(E)] = True
    v = (inc @ we) * rng.uniform(0.9, 1.1, size=n_sets)
    # greedy subcover by cost per newly covered element
    uncovered = np.ones(E, dtype=bool)
    cover = []
    while uncovered.any():
        gain = (inc & uncovered).sum(axis=1)
        ratio_ = np.where(gain > 0, v / np.maximum(gain, 1), np.inf)
        i = int(np.argmin(ratio_))
        cover.append(i)
        uncovered &= ~inc[i]
    rest = np.array([i for i in range(n_sets) if i not in set(cover)], dtype=int)
    k = min(int(round(tolled_share * n_sets)), len(rest))
    tolled = tuple(sorted(int(i) for i in rng.choice(rest, size=k, replace=False))) if k else ()
    v[list(tolled)] /= 2.3
    sets = tuple(tuple(np.flatnonzero(row).tolist()) for row in inc)
    data = SetCoverData(E, sets, tuple(np.round(we, 6)))
    meta = {"generator": "minscpp", "n_sets": n_sets, "ratio": ratio, "n_elements": E, "seed": seed}
    return PricingInstance("minscpp", np.round(v), tolled, data, meta)


def generate_kip(n, seed):
    """Knapsack interdiction instance with half-sum capacities."""
    rng = np.random.default_rng(seed)
    v = rng.integers(1, 101, size=n)
    w = rng.integers(1, 101, size=n)
    W = rng.integers(1, 101, size=n)
    data = KipData(tuple(v), tuple(w), int(round(0.5 * w.sum())), tuple(W), int(round(0.5 * W.sum())))
    meta = {"generator": "kip", "n": n, "seed": seed}
    return PricingInstance("kip", v, tuple(range(n)), data, meta)


def generate(problem, seed, **params):
    fn = {"kpp": generate_kpp, "maxsspp": generate_maxsspp, "minscpp": generate_minscpp,
          "kip": generate_kip}[problem]
    return fn(seed=seed, **params)
