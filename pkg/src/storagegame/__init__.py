"""Potential-game model of distributed storage allocation.

Units place data atoms on neighbouring resources; a noisy best-response
dynamics with annealed inverse temperature drives the allocation towards
maximisers of a potential function.
"""

from .dynamics import SimParams, gamma_schedule, gibbs, simulate
from .feasibility import check, feasible_by_flow, feasible_by_subsets, maximal_irreducible_subsets, strictly_feasible
from .game import is_nash, optimal_potential, potential, prospective_utility, utility
from .model import AllocationState, Instance, Move, MoveKind, apply_move, make_instance

__all__ = [
    "AllocationState", "Instance", "Move", "MoveKind", "SimParams", "apply_move", "check",
    "feasible_by_flow", "feasible_by_subsets", "gamma_schedule", "gibbs", "is_nash",
    "make_instance", "maximal_irreducible_subsets", "optimal_potential", "potential",
    "prospective_utility", "simulate", "strictly_feasible", "utility",
]

__version__ = "0.1.0"
