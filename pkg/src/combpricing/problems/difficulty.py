"""Difficulty score of a pricing instance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import MAXIMIZE, brute_force_cpp


@dataclass
class Difficulty:
    f0: float
    finf: float
    g: float
    score: float


def follower_bounds(instance):
    """Follower optimum with zero tolls and with tolled items removed."""
    prob = instance.follower()
    v = instance.v
    _, f0 = prob.best_response(v)
    if prob.sense == MAXIMIZE:
        profit = v.copy()
        profit[list(instance.tolled)] = 0.0
        _, finf = prob.best_response(profit)
    else:
        allowed = 0
        for i in instance.tollfree:
            allowed |= 1 << i
        finf = prob.min_cover_cost(v, allowed=allowed)
    return float(f0), float(finf)


def estimate_difficulty(instance, g=None):
    """Ratio of the follower gain from tolled items to the optimal revenue ``g``."""
    if instance.problem == "kip":
        raise ValueError("difficulty is defined for pricing instances only")
    f0, finf = follower_bounds(instance)
    if g is None:
        g = brute_force_cpp(instance).revenue
    spread = f0 - finf if instance.sense == MAXIMIZE else finf - f0
    if abs(spread) <= 1e-9 and abs(g) <= 1e-9:
        score = 0.0
    elif abs(g) <= 1e-9:
        score = np.inf
    else:
        score = spread / g
    return Difficulty(f0, finf, float(g), float(score))
