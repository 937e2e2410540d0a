"""The five layout cost terms, each normalized into [0, 1].

Every evaluator shares the signature ``evaluate_<name>(scene, layout, subset)``
where ``subset`` restricts aggregation to those widget ids (pass all ids for a
full-layout score). Lower is better for all terms. Solvers evaluate whole
populations at once through :func:`batch_evaluate`; the per-term functions wrap
the same kernels, so scalar and batch paths agree bitwise.

Terms:

* neck strain - observation-weighted mean |elevation| of the eye->widget ray,
  normalized by pi/2 (zero at eye level, 1 straight overhead/underfoot).
* shoulder load - same construction from the shoulder, weighted by interaction
  probability.
* distance comfort - mean of c(d) = 1 - exp(-(d/0.5 + 0.5/d - 2)); zero at
  0.5 m, approaching 1 at zero and infinite distance.
* field of view - observation-weighted mean of g(theta), zero inside the 5 deg
  foveal cone, then linear in the gaze angle up to 1 at 180 deg.
* semantic agreement - association-cost-weighted widget-object distances,
  normalized by the scene diameter (max region-corner-to-object distance).
"""

from __future__ import annotations

from enum import IntEnum
from typing import Iterable

import numpy as np

from .scene import Layout, Scene, layout_to_array

FOVEAL_CUTOFF_DEG = 5.0
COMFORT_DISTANCE_M = 0.5


class Objective(IntEnum):
    NECK_STRAIN = 0
    SHOULDER_LOAD = 1
    DISTANCE_COMFORT = 2
    FIELD_OF_VIEW = 3
    SEMANTIC_AGREEMENT = 4


NUM_OBJECTIVES = len(Objective)

# Every term is normalized into [0, 1] by construction, so the per-term
# maximum used to normalize adjustment deltas is identically 1.
OBJECTIVE_MAX = 1.0

OBJECTIVE_LABELS = {
    Objective.NECK_STRAIN: "neck strain",
    Objective.SHOULDER_LOAD: "shoulder load",
    Objective.DISTANCE_COMFORT: "distance comfort",
    Objective.FIELD_OF_VIEW: "field of view",
    Objective.SEMANTIC_AGREEMENT: "semantic agreement",
}


class EvaluationError(ValueError):
    """Raised for domain errors: empty subsets, unknown ids, missing objects."""


def subset_indices(scene: Scene, subset: Iterable[str]) -> np.ndarray:
    """Sorted scene indices for a widget id subset (canonical evaluation order)."""
    ids = list(subset)
    if not ids:
        raise EvaluationError("subset must contain at least one widget id")
    index = scene.widget_index
    unknown = [wid for wid in ids if wid not in index]
    if unknown:
        raise EvaluationError(f"unknown widget ids in subset: {unknown}")
    return np.array(sorted(index[wid] for wid in set(ids)), dtype=int)


# ---------------------------------------------------------------------------
# Batch kernels: positions is (P, N, 3), idx selects subset columns.
# ---------------------------------------------------------------------------

def _elevation_cost(vertex: np.ndarray, positions: np.ndarray, idx: np.ndarray, weights: np.ndarray) -> np.ndarray:
    v = positions[:, idx, :] - vertex
    dy = np.abs(v[..., 1])
    dxz = np.hypot(v[..., 0], v[..., 2])
    pitch = np.arctan2(dy, dxz)  # |elevation| in [0, pi/2]; zero vector -> 0
    w = weights[idx]
    total = w.sum()
    if total == 0.0:
        return np.zeros(positions.shape[0])
    return (pitch * w).sum(axis=1) / (total * (np.pi / 2.0))


def _neck_strain(scene: Scene, positions: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return _elevation_cost(scene.eye_array, positions, idx, scene.p_obs_array)


def _shoulder_load(scene: Scene, positions: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return _elevation_cost(scene.shoulder_array, positions, idx, scene.p_int_array)


def _distance_comfort(scene: Scene, positions: np.ndarray, idx: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(positions[:, idx, :] - scene.eye_array, axis=-1)
    safe = np.where(d > 0.0, d, 1.0)
    c = 1.0 - np.exp(-(safe / COMFORT_DISTANCE_M + COMFORT_DISTANCE_M / safe - 2.0))
    c = np.where(d > 0.0, c, 1.0)  # limit value at d = 0
    return c.mean(axis=1)


def _field_of_view(scene: Scene, positions: np.ndarray, idx: np.ndarray) -> np.ndarray:
    v = positions[:, idx, :] - scene.eye_array
    norm = np.linalg.norm(v, axis=-1)
    safe = np.where(norm > 0.0, norm, 1.0)
    cosang = np.clip((v * scene.gaze_array).sum(axis=-1) / safe, -1.0, 1.0)
    theta = np.degrees(np.arccos(cosang))
    theta = np.where(norm > 0.0, theta, 0.0)
    g = np.where(
        theta <= FOVEAL_CUTOFF_DEG,
        0.0,
        (theta - FOVEAL_CUTOFF_DEG) / (180.0 - FOVEAL_CUTOFF_DEG),
    )
    w = scene.p_obs_array[idx]
    total = w.sum()
    if total == 0.0:
        return np.zeros(positions.shape[0])
    return (g * w).sum(axis=1) / total


def _semantic_agreement(scene: Scene, positions: np.ndarray, idx: np.ndarray) -> np.ndarray:
    if len(scene.objects) == 0:
        raise EvaluationError("semantic agreement requires at least one physical object")
    d = np.linalg.norm(positions[:, idx, None, :] - scene.object_positions, axis=-1)  # (P, m, O)
    c = scene.cost_matrix[idx]  # (m, O)
    denom = c.sum() * scene.diameter
    if denom == 0.0:
        return np.zeros(positions.shape[0])
    return (d * c).sum(axis=(1, 2)) / denom


_KERNELS = {
    Objective.NECK_STRAIN: _neck_strain,
    Objective.SHOULDER_LOAD: _shoulder_load,
    Objective.DISTANCE_COMFORT: _distance_comfort,
    Objective.FIELD_OF_VIEW: _field_of_view,
    Objective.SEMANTIC_AGREEMENT: _semantic_agreement,
}


def batch_evaluate(scene: Scene, positions: np.ndarray, subset: Iterable[str] | None = None) -> np.ndarray:
    """Evaluate all K terms for a population of position arrays.

    positions: (P, N, 3) in scene widget order. Returns (P, K).
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 3 or positions.shape[1] != len(scene.widgets) or positions.shape[2] != 3:
        raise EvaluationError(
            f"positions must have shape (P, {len(scene.widgets)}, 3), got {positions.shape}"
        )
    idx = subset_indices(scene, subset if subset is not None else scene.widget_ids)
    return np.column_stack([_KERNELS[obj](scene, positions, idx) for obj in Objective])


def _single(scene: Scene, layout: Layout, subset: Iterable[str], objective: Objective) -> float:
    positions = layout_to_array(scene, layout)[None, :, :]
    idx = subset_indices(scene, subset)
    return float(_KERNELS[objective](scene, positions, idx)[0])


def evaluate_neck_strain(scene: Scene, layout: Layout, subset: Iterable[str]) -> float:
    return _single(scene, layout, subset, Objective.NECK_STRAIN)


def evaluate_shoulder_load(scene: Scene, layout: Layout, subset: Iterable[str]) -> float:
    return _single(scene, layout, subset, Objective.SHOULDER_LOAD)


def evaluate_distance_comfort(scene: Scene, layout: Layout, subset: Iterable[str]) -> float:
    return _single(scene, layout, subset, Objective.DISTANCE_COMFORT)


def evaluate_field_of_view(scene: Scene, layout: Layout, subset: Iterable[str]) -> float:
    return _single(scene, layout, subset, Objective.FIELD_OF_VIEW)


def evaluate_semantic_agreement(scene: Scene, layout: Layout, subset: Iterable[str]) -> float:
    return _single(scene, layout, subset, Objective.SEMANTIC_AGREEMENT)


EVALUATORS = {
    Objective.NECK_STRAIN: evaluate_neck_strain,
    Objective.SHOULDER_LOAD: evaluate_shoulder_load,
    Objective.DISTANCE_COMFORT: evaluate_distance_comfort,
    Objective.FIELD_OF_VIEW: evaluate_field_of_view,
    Objective.SEMANTIC_AGREEMENT: evaluate_semantic_agreement,
}


def evaluate_all(scene: Scene, layout: Layout, subset: Iterable[str] | None = None) -> tuple[float, ...]:
    """All K values in Objective order; deterministic for identical inputs."""
    positions = layout_to_array(scene, layout)[None, :, :]
    row = batch_evaluate(scene, positions, subset if subset is not None else scene.widget_ids)[0]
    return tuple(float(v) for v in row)


def as_objective_vector(values: Iterable[float]) -> tuple[float, ...]:
    """Validate and freeze a K-length objective vector (range and NaN checks)."""
    vec = tuple(float(v) for v in values)
    if len(vec) != NUM_OBJECTIVES:
        raise EvaluationError(f"objective vector must have length {NUM_OBJECTIVES}, got {len(vec)}")
    for j, v in enumerate(vec):
        if np.isnan(v):
            raise EvaluationError(f"objective vector contains NaN at index {j}")
        if not 0.0 <= v <= 1.0:
            raise EvaluationError(f"objective value out of [0, 1] at index {j}: {v}")
    return vec
