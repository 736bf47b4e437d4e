"""Dense simplex, best-bound branch and bound with lazy constraints, and solver backends."""

from .backends import Backend, available_backends, get_backend, iterative_resolve, register_backend
from .bnb import BbStats, Cut, LazyResult, MilpModel, MilpSolution, NewVar, milp_solve
from .simplex import DenseSimplex, LpStalled, lp_solve
