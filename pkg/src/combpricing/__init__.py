"""Bilevel combinatorial pricing solved through dynamic-programming reformulations."""

from .core import (ConfigError, FollowerInfeasible, FollowerSolution, InstanceTooLarge, PricingInstance,
                   SolveResult, SolveStats, brute_force_cpp, brute_force_kip, optimistic_best_response)

__all__ = [
    "ConfigError", "FollowerInfeasible", "FollowerSolution", "InstanceTooLarge", "PricingInstance",
    "SolveResult", "SolveStats", "brute_force_cpp", "brute_force_kip", "optimistic_best_response",
]
