"""Preference-guided multi-objective layout adaptation.

Infers a user's priority ranking over layout cost terms from their widget
adjustments, runs a priority-level Pareto search, and auto-selects the
Pareto-optimal layout nearest the expressed preference.
"""

from .moo import EvaluatedSolution, crowding_distance, dominates, fast_nondominated_sort, hypervolume
from .objectives import NUM_OBJECTIVES, Objective, evaluate_all
from .preference import DeltaSign, aggregate_deltas, assign_priorities, compute_delta
from .candidate import ReferencePoint, distance_to_front, make_reference, select_nearest
from .scene import Layout, Scene, load_fixture, load_scene, serialize_scene, validate_layout
from .session import Mode, adapt, finish, replay_transcript, start_session, submit_moves
from .solvers import (
    ParetoArchive,
    PriorityAssignment,
    SolverConfig,
    pl_compare,
    pl_rank,
    run_nsga2,
    run_plnsga2,
)

__version__ = "0.1.0"

__all__ = [
    "DeltaSign",
    "EvaluatedSolution",
    "Layout",
    "Mode",
    "NUM_OBJECTIVES",
    "Objective",
    "ParetoArchive",
    "PriorityAssignment",
    "ReferencePoint",
    "Scene",
    "SolverConfig",
    "adapt",
    "aggregate_deltas",
    "assign_priorities",
    "compute_delta",
    "crowding_distance",
    "distance_to_front",
    "dominates",
    "evaluate_all",
    "fast_nondominated_sort",
    "finish",
    "hypervolume",
    "load_fixture",
    "load_scene",
    "make_reference",
    "pl_compare",
    "pl_rank",
    "replay_transcript",
    "run_nsga2",
    "run_plnsga2",
    "select_nearest",
    "serialize_scene",
    "start_session",
    "submit_moves",
    "validate_layout",
]
