"""Concrete follower problems, instance generators and the difficulty score."""

from .difficulty import Difficulty, estimate_difficulty, follower_bounds
from .generators import generate, generate_kip, generate_kpp, generate_maxsspp, generate_minscpp
from .knapsack import KipData, KipFollower, KnapsackData, KnapsackFollower, knapsack_value
from .set_cover import SetCoverData, SetCoverFollower
from .stable_set import GraphData, StableSetFollower

FOLLOWERS = {
    "kpp": KnapsackFollower,
    "maxsspp": StableSetFollower,
    "minscpp": SetCoverFollower,
    "kip": KipFollower,
}


def make_follower(instance):
    try:
        cls = FOLLOWERS[instance.problem]
    except KeyError:
        raise ValueError(f"unknown problem {instance.problem!r}") from None
    return cls(instance)


def sample_maximal(problem, rng):
    """Random maximal (minimal for covers) feasible follower solution."""
    return problem.sample_solution(rng)
