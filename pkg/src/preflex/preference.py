"""Preference inference from widget adjustments.

Each recorded adjustment yields a per-objective delta computed on the moved
widget subset; deltas are aggregated across iterations with a triangular
moving average (later iterations weigh linearly more) and thresholded into
ordered priority groups (high / mid / low).

Sign convention: by default deltas are improvement-positive (cost before minus
cost after), so an adjustment that reduces a cost produces a positive delta
and pushes that objective toward the high-priority group. The raw-change
convention (after minus before, with mirrored threshold semantics) is
available via :class:`DeltaSign` for auditing; both produce identical
groupings.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .objectives import NUM_OBJECTIVES, OBJECTIVE_MAX, evaluate_all
from .scene import Layout, Scene
from .solvers import PriorityAssignment

DEFAULT_TAU_LOWER = 0.0
DEFAULT_TAU_UPPER = 0.2


class PreferenceError(ValueError):
    """Domain errors: empty histories, bad thresholds, inconsistent records."""


class DeltaSign(str, Enum):
    IMPROVEMENT = "improvement"  # delta = before - after (cost reduction > 0)
    RAW_CHANGE = "raw_change"    # delta = after - before


@dataclass(frozen=True)
class AdjustmentRecord:
    """One iteration's adjustment: before/after layouts and the resulting deltas."""

    t: int
    moved_ids: frozenset[str]
    before: Layout
    after: Layout
    delta: tuple[float, ...]

    def __post_init__(self):
        if self.t < 1:
            raise PreferenceError(f"iteration index must be >= 1, got {self.t}")
        if not self.moved_ids:
            raise PreferenceError("moved_ids must be non-empty")
        if len(self.delta) != NUM_OBJECTIVES:
            raise PreferenceError(f"delta must have length {NUM_OBJECTIVES}")
        for wid in self.before.positions:
            if wid not in self.moved_ids and self.before.positions[wid] != self.after.positions[wid]:
                raise PreferenceError(
                    f"before/after layouts differ on widget {wid!r} outside moved_ids"
                )


def compute_delta(scene: Scene, before: Layout, after: Layout,
                  moved_ids: Iterable[str], *,
                  sign: DeltaSign = DeltaSign.IMPROVEMENT) -> tuple[float, ...]:
    """Per-objective delta of the moved subset, normalized by the per-term maximum.

    Every term is normalized into [0, 1] (OBJECTIVE_MAX == 1), so the division
    is kept only for symmetry with the delta definition.
    """
    moved = list(moved_ids)
    if not moved:
        raise PreferenceError("moved_ids must be non-empty")
    f_before = evaluate_all(scene, before, moved)
    f_after = evaluate_all(scene, after, moved)
    if sign is DeltaSign.IMPROVEMENT:
        return tuple((b - a) / OBJECTIVE_MAX for b, a in zip(f_before, f_after))
    return tuple((a - b) / OBJECTIVE_MAX for b, a in zip(f_before, f_after))


def aggregate_deltas(history: Sequence[AdjustmentRecord]) -> tuple[float, ...]:
    """Triangular moving average over the adjustment history.

    delta_bar_j = sum_t t * delta_j^t / sum_t t, with t = 1..T contiguous.
    """
    if not history:
        raise PreferenceError("adjustment history must be non-empty")
    expected = list(range(1, len(history) + 1))
    actual = [rec.t for rec in history]
    if actual != expected:
        raise PreferenceError(f"iteration indices must be contiguous 1..T, got {actual}")
    total_weight = sum(expected)
    return tuple(
        sum(rec.t * rec.delta[j] for rec in history) / total_weight
        for j in range(NUM_OBJECTIVES)
    )


def assign_priorities(delta_bar: Sequence[float],
                      tau_lower: float = DEFAULT_TAU_LOWER,
                      tau_upper: float = DEFAULT_TAU_UPPER, *,
                      sign: DeltaSign = DeltaSign.IMPROVEMENT) -> PriorityAssignment:
    """Threshold aggregated deltas into ordered priority groups.

    Under the improvement-positive convention: high = {j : delta_bar_j > tau_upper},
    mid = {j : tau_lower <= delta_bar_j <= tau_upper}, low = the rest. Empty
    groups are dropped while preserving order; all-empty never happens since
    every objective lands somewhere.
    """
    if tau_lower > tau_upper:
        raise PreferenceError(f"tau_lower must be <= tau_upper ({tau_lower} > {tau_upper})")
    values = list(delta_bar)
    if sign is DeltaSign.RAW_CHANGE:
        values = [-v for v in values]
    high = tuple(j for j, v in enumerate(values) if v > tau_upper)
    mid = tuple(j for j, v in enumerate(values) if tau_lower <= v <= tau_upper)
    low = tuple(j for j, v in enumerate(values) if v < tau_lower)
    groups = []
    labels = []
    for group, label in ((high, "high"), (mid, "mid"), (low, "low")):
        if group:
            groups.append(group)
            labels.append(label)
    return PriorityAssignment(
        groups=tuple(groups),
        labels=tuple(labels),
        thresholds=(float(tau_lower), float(tau_upper)),
        delta_snapshot=tuple(float(v) for v in delta_bar),
    )
