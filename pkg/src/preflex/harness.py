"""Scripted-user experiment rig: batch condition comparison with paired seeds.

Simulated users carry a ground-truth priority assignment and move widgets
greedily (optionally with position noise) to improve their high-priority
costs. Per seed, every condition starts from the same initial layout and the
user noise stream is drawn from a condition-independent generator, so the
design is fully paired. Rows record the optimization metrics: distance to the
final archive (all objectives and ground-truth-high only), archive
hypervolume, move counts, and wall time.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .candidate import distance_to_front, make_reference
from .objectives import NUM_OBJECTIVES, batch_evaluate
from .scene import Scene, layout_to_array
from .session import (
    Mode,
    SessionState,
    archive_hypervolume,
    derive_seed,
    replay_transcript,
    start_session,
    submit_moves,
    transcript_dict,
)
from .session import adapt as session_adapt
from .solvers import PriorityAssignment, SolverConfig

LATTICE_PER_AXIS = 5

# derive_seed tag separating user-noise streams from session sub-seeds.
_SEED_USER = 17


class HarnessError(ValueError):
    pass


class Strategy(str, Enum):
    GREEDY = "greedy"
    NOISY_GREEDY = "noisy_greedy"


@dataclass(frozen=True)
class StopRule:
    """Stop after max_iterations, or earlier once the mean ground-truth
    high-priority cost of the full layout drops to the satisfaction level."""

    max_iterations: int = 3
    satisfaction: float | None = None


@dataclass(frozen=True)
class SimulatedUser:
    name: str
    priorities: PriorityAssignment  # ground truth; groups[0] is the high set
    strategy: Strategy = Strategy.GREEDY
    noise_sigma: float = 0.0
    moves_per_iteration: int = 2
    stop_rule: StopRule = StopRule()

    def __post_init__(self):
        if not 1 <= self.moves_per_iteration <= 3:
            raise HarnessError(
                f"moves_per_iteration must be in [1, 3], got {self.moves_per_iteration}"
            )
        if self.strategy is Strategy.NOISY_GREEDY and self.noise_sigma <= 0:
            raise HarnessError("noisy_greedy requires noise_sigma > 0")

    @property
    def high_indices(self) -> tuple[int, ...]:
        return self.priorities.groups[0]


@dataclass(frozen=True)
class MovePlan:
    moves: dict[str, tuple[float, float, float]]
    no_op: bool


def region_lattice(scene: Scene, per_axis: int = LATTICE_PER_AXIS) -> np.ndarray:
    """Fixed (boxes * per_axis^3, 3) lattice of candidate positions inside the region."""
    points = []
    for box in scene.region.boxes:
        axes = [np.linspace(box.min_corner[a], box.max_corner[a], per_axis) for a in range(3)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        points.append(grid)
    return np.concatenate(points)


def _high_cost(scene: Scene, positions: np.ndarray, widget_id: str,
               high: Sequence[int]) -> np.ndarray:
    """Mean ground-truth-high cost of a single widget across candidate positions."""
    vals = batch_evaluate(scene, positions, [widget_id])
    return vals[:, list(high)].mean(axis=1)


def simulate_step(user: SimulatedUser, state: SessionState,
                  rng: np.random.Generator) -> MovePlan:
    """Plan this iteration's moves: per widget, grid-search the lattice for the
    position minimizing the user's high-priority costs (evaluated on that
    widget alone), then move the top widgets by achievable improvement.

    If no relocation strictly improves anything, the plan is a zero-
    displacement move of the smallest-index widget, flagged as a no-op. The
    noisy strategy draws a fixed number of noise samples per iteration
    regardless of the chosen widgets, so noise streams stay aligned across
    conditions.
    """
    scene = state.scene
    lattice = region_lattice(scene)
    current = layout_to_array(scene, state.current)
    n_widgets = len(scene.widgets)
    high = user.high_indices

    improvements = np.empty(n_widgets)
    best_points = np.empty((n_widgets, 3))
    for i, wid in enumerate(scene.widget_ids):
        candidates = np.broadcast_to(current, (len(lattice), n_widgets, 3)).copy()
        candidates[:, i, :] = lattice
        costs = _high_cost(scene, candidates, wid, high)
        now = _high_cost(scene, current[None, :, :], wid, high)[0]
        j = int(np.argmin(costs))
        improvements[i] = now - costs[j]
        best_points[i] = lattice[j]

    k = user.moves_per_iteration
    noise = rng.normal(0.0, user.noise_sigma, size=(k, 3)) if user.strategy is Strategy.NOISY_GREEDY else np.zeros((k, 3))

    order = np.argsort(-improvements, kind="stable")
    chosen = [int(i) for i in order[:k] if improvements[i] > 1e-12]
    if not chosen:
        wid = scene.widget_ids[0]
        return MovePlan(moves={wid: state.current.positions[wid]}, no_op=True)

    moves: dict[str, tuple[float, float, float]] = {}
    for slot, i in enumerate(chosen):
        target = scene.region.clamp(best_points[i] + noise[slot])
        moves[scene.widget_ids[i]] = (float(target[0]), float(target[1]), float(target[2]))
    return MovePlan(moves=moves, no_op=False)


def _satisfied(user: SimulatedUser, state: SessionState) -> bool:
    if user.stop_rule.satisfaction is None:
        return False
    scene = state.scene
    vals = batch_evaluate(scene, layout_to_array(scene, state.current)[None], scene.widget_ids)[0]
    return float(vals[list(user.high_indices)].mean()) <= user.stop_rule.satisfaction


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

EXPORT_COLUMNS = (
    "user", "condition", "moves_source", "seed", "moved_elements",
    "distance_all", "distance_high", "hypervolume", "iterations", "wall_time_s",
)


@dataclass
class ExperimentResult:
    rows: list[dict] = field(default_factory=list)
    transcripts: dict[tuple[str, str, int], dict] = field(default_factory=dict)
    users: tuple[SimulatedUser, ...] = ()
    conditions: tuple[Mode, ...] = ()
    seeds: tuple[int, ...] = ()
    scene_ref: str = "inline"


def _session_metrics(user: SimulatedUser, state: SessionState) -> tuple[float, float, float]:
    """(distance_all, distance_high, hypervolume) of the session's final archive."""
    hv = archive_hypervolume(state.last_archive) if state.last_archive else math.nan
    if state.mode is Mode.MANUAL or not state.history or state.last_archive is None:
        return math.nan, math.nan, hv
    last = state.history[-1]
    ref = make_reference(state.scene, last.after, last.moved_ids)
    d_all = distance_to_front(state.scene, state.last_archive, ref, range(NUM_OBJECTIVES))
    d_high = distance_to_front(state.scene, state.last_archive, ref, user.high_indices)
    return d_all, d_high, hv


def _run_cell(scene: Scene, scene_ref: str, user: SimulatedUser, condition: Mode,
              seed: int, user_index: int, config: SolverConfig,
              tau_lower: float, tau_upper: float) -> tuple[dict, dict]:
    started = time.perf_counter()
    state = start_session(scene, condition, replace(config, seed=seed),
                          tau_lower=tau_lower, tau_upper=tau_upper, scene_ref=scene_ref)
    user_rng = np.random.default_rng(derive_seed(seed, _SEED_USER, user_index))
    iterations = 0
    for _ in range(user.stop_rule.max_iterations):
        plan = simulate_step(user, state, user_rng)
        submit_moves(state, plan.moves)
        if condition is not Mode.MANUAL:
            session_adapt(state)
        iterations += 1
        if _satisfied(user, state):
            break
    d_all, d_high, hv = _session_metrics(user, state)
    row = {
        "user": user.name,
        "condition": condition.value,
        "moves_source": condition.value,
        "seed": seed,
        "moved_elements": state.moved_total,
        "distance_all": d_all,
        "distance_high": d_high,
        "hypervolume": hv,
        "iterations": iterations,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    return row, transcript_dict(state)


def run_experiment(scene: Scene, users: Sequence[SimulatedUser],
                   conditions: Sequence[Mode], seeds: Sequence[int],
                   config: SolverConfig, *,
                   tau_lower: float = 0.0, tau_upper: float = 0.2,
                   scene_ref: str = "inline", workers: int = 1) -> ExperimentResult:
    """Full factorial (user x condition x seed); rows in canonical order.

    Cells are independent; with workers > 1 they run in parallel processes and
    the output is identical to the sequential run.
    """
    if not users or not conditions or not seeds:
        raise HarnessError("users, conditions, and seeds must be non-empty")
    conditions = tuple(Mode(c) for c in conditions)
    cells = [
        (user, ui, condition, seed)
        for ui, user in enumerate(users)
        for condition in conditions
        for seed in seeds
    ]
    result = ExperimentResult(
        users=tuple(users), conditions=conditions, seeds=tuple(int(s) for s in seeds),
        scene_ref=scene_ref,
    )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_cell, scene, scene_ref, user, condition, seed, ui,
                            config, tau_lower, tau_upper)
                for user, ui, condition, seed in cells
            ]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [
            _run_cell(scene, scene_ref, user, condition, seed, ui, config, tau_lower, tau_upper)
            for user, ui, condition, seed in cells
        ]
    for (user, _, condition, seed), (row, transcript) in zip(cells, outcomes):
        result.rows.append(row)
        result.transcripts[(user.name, condition.value, seed)] = transcript
    return result


def cross_replay(scene: Scene, result: ExperimentResult) -> ExperimentResult:
    """Re-run each optimizer condition against the other condition's recorded
    moves (paired per user and seed); rows are tagged with the source condition.

    Applying cross_replay twice restores the original (condition, moves)
    pairing, hence the original distances.
    """
    optimizer = [c for c in result.conditions if c is not Mode.MANUAL]
    if len(optimizer) != 2:
        raise HarnessError(
            f"cross_replay needs exactly two optimizer conditions, have {[c.value for c in optimizer]}"
        )
    a, b = optimizer
    swapped = ExperimentResult(users=result.users, conditions=result.conditions,
                               seeds=result.seeds, scene_ref=result.scene_ref)
    origin = {
        (row["user"], row["condition"], row["seed"]): row["moves_source"]
        for row in result.rows
    }
    jobs = []
    for user in result.users:
        for run_as, moves_from in ((a, b), (b, a)):
            for seed in result.seeds:
                key = (user.name, moves_from.value, seed)
                if key not in result.transcripts:
                    raise HarnessError(f"missing transcript for {key}")
                source = dict(result.transcripts[key])
                source["mode"] = run_as.value
                jobs.append((user, run_as, origin[key], seed, source))

    def _one(job):
        user, run_as, moves_from, seed, source = job
        started = time.perf_counter()
        state, _ = replay_transcript(source, scene=scene)
        d_all, d_high, hv = _session_metrics(user, state)
        row = {
            "user": user.name,
            "condition": run_as.value,
            "moves_source": moves_from,
            "seed": seed,
            "moved_elements": state.moved_total,
            "distance_all": d_all,
            "distance_high": d_high,
            "hypervolume": hv,
            "iterations": state.adapt_count,
            "wall_time_s": round(time.perf_counter() - started, 3),
        }
        return row, transcript_dict(state), (user.name, run_as.value, seed)

    outcomes = [_one(job) for job in jobs]
    for row, transcript, key in outcomes:
        swapped.rows.append(row)
        swapped.transcripts[key] = transcript
    return swapped


def export_results(result: ExperimentResult, path: str | Path) -> Path:
    """Write rows as CSV with a stable column order; re-export is byte-identical."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EXPORT_COLUMNS)
        for row in result.rows:
            writer.writerow([row[c] for c in EXPORT_COLUMNS])
    return path


def load_results(path: str | Path) -> list[dict]:
    """Read an exported CSV back into typed rows."""
    rows = []
    with Path(path).open(newline="") as fh:
        for raw in csv.DictReader(fh):
            row: dict = dict(raw)
            for key in ("moved_elements", "seed", "iterations"):
                row[key] = int(raw[key])
            for key in ("distance_all", "distance_high", "hypervolume", "wall_time_s"):
                row[key] = float(raw[key])
            rows.append(row)
    return rows


def default_users(count: int, *, moves_per_iteration: int = 2, sigma: float = 0.0,
                  max_iterations: int = 2) -> list[SimulatedUser]:
    """Deterministic roster of simulated users with cycled high-priority pairs."""
    pairs = [(3, 4), (0, 2), (1, 3), (2, 4), (0, 1)]
    users = []
    for i in range(count):
        high = pairs[i % len(pairs)]
        rest = tuple(j for j in range(NUM_OBJECTIVES) if j not in high)
        pa = PriorityAssignment(groups=(high, rest), labels=("high", "mid"))
        users.append(SimulatedUser(
            name=f"user{i}",
            priorities=pa,
            strategy=Strategy.NOISY_GREEDY if sigma > 0 else Strategy.GREEDY,
            noise_sigma=sigma,
            moves_per_iteration=moves_per_iteration,
            stop_rule=StopRule(max_iterations=max_iterations),
        ))
    return users
