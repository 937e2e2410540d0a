"""Nearest-candidate selection: map the user's adjusted widgets into objective
space and pick the archive layout whose same-widget objective values are
closest in the two-norm.

Selection compares candidates only on the moved widget subset - the candidate
evaluation plugs each archive layout's positions of exactly those widgets into
the objective terms - but the returned solution replaces the whole layout,
moved widgets included.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .moo import EvaluatedSolution
from .objectives import batch_evaluate, evaluate_all
from .scene import Layout, Scene, layout_to_array
from .solvers import ParetoArchive


class SelectionError(ValueError):
    """Domain errors: empty archives, empty subsets."""


@dataclass(frozen=True)
class ReferencePoint:
    """Objective vector of the user's adjusted widgets, on the moved subset."""

    values: tuple[float, ...]
    moved_ids: frozenset[str]


def make_reference(scene: Scene, after: Layout, moved_ids: Iterable[str]) -> ReferencePoint:
    moved = frozenset(moved_ids)
    if not moved:
        raise SelectionError("moved_ids must be non-empty")
    return ReferencePoint(values=evaluate_all(scene, after, moved), moved_ids=moved)


def _restricted_objectives(scene: Scene, archive: ParetoArchive,
                           moved_ids: frozenset[str]) -> np.ndarray:
    """(len(archive), K) objective values of each candidate on the moved subset.

    Candidates are evaluated one at a time so every row is bitwise identical
    to a standalone subset evaluation of that layout.
    """
    return np.vstack([
        batch_evaluate(scene, layout_to_array(scene, s.decision)[None], moved_ids)
        for s in archive.solutions
    ])


def select_nearest(scene: Scene, archive: ParetoArchive, ref: ReferencePoint) -> EvaluatedSolution:
    """Archive member minimizing the two-norm distance to the reference point.

    Ties resolve to the lowest archive index; the result is always an existing
    archive member, never a synthesized layout.
    """
    if len(archive.solutions) == 0:
        raise SelectionError("archive must be non-empty")
    restricted = _restricted_objectives(scene, archive, ref.moved_ids)
    d = np.linalg.norm(restricted - np.asarray(ref.values), axis=1)
    return archive.solutions[int(np.argmin(d))]


def nearest_index(scene: Scene, archive: ParetoArchive, ref: ReferencePoint) -> tuple[int, float]:
    """(index, distance) of the nearest candidate; same tie rule as select_nearest."""
    if len(archive.solutions) == 0:
        raise SelectionError("archive must be non-empty")
    restricted = _restricted_objectives(scene, archive, ref.moved_ids)
    d = np.linalg.norm(restricted - np.asarray(ref.values), axis=1)
    i = int(np.argmin(d))
    return i, float(d[i])


def distance_to_front(scene: Scene, archive: ParetoArchive, ref: ReferencePoint,
                      objective_subset: Sequence[int]) -> float:
    """Min over the archive of the two-norm restricted to the given objective indices.

    With all K indices this equals the distance select_nearest minimizes; a
    smaller index set never increases the value.
    """
    if len(archive.solutions) == 0:
        raise SelectionError("archive must be non-empty")
    idx = sorted(set(int(j) for j in objective_subset))
    if not idx:
        raise SelectionError("objective_subset must be non-empty")
    restricted = _restricted_objectives(scene, archive, ref.moved_ids)
    diff = restricted[:, idx] - np.asarray(ref.values)[idx]
    return float(np.linalg.norm(diff, axis=1).min())
