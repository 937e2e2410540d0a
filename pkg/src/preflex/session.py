"""Adaptation sessions: initial layout, user moves, inference, solve, select.

A session is seeded and fully replayable: the seed plus the ordered move list
(the transcript) determine every layout the session ever produces. Sub-seeds
for the initial solver run, candidate sampling, and each adapt run are derived
from the session seed with :func:`derive_seed`, so the initial layout is
identical across modes for equal seeds.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np

from . import moo
from .candidate import distance_to_front, make_reference, nearest_index
from .objectives import NUM_OBJECTIVES
from .preference import (
    AdjustmentRecord,
    DeltaSign,
    DEFAULT_TAU_LOWER,
    DEFAULT_TAU_UPPER,
    aggregate_deltas,
    assign_priorities,
    compute_delta,
)
from .scene import Layout, Scene, scene_to_json
from .solvers import (
    ParetoArchive,
    PriorityAssignment,
    ProgressFn,
    SolverConfig,
    run_nsga2,
    run_plnsga2,
)

MAX_OPTIMIZER_MOVES = 3

# Metric conventions: hypervolume in normalized objective space with a fixed
# sample cloud (lower bound zero) and a generator independent of any solver.
HV_SAMPLES = 20_000
HV_SEED = 90731


class SessionError(ValueError):
    """Protocol violations: bad move counts, wrong mode, missing adjustments."""


class Mode(str, Enum):
    MANUAL = "manual"
    PARETO_SELECT = "pareto_select"
    PREFERENCE = "preference"


def derive_seed(seed: int, *tags: int) -> int:
    """Deterministic sub-seed: first 64-bit word of SeedSequence([seed, *tags])."""
    ss = np.random.SeedSequence([int(seed), *[int(t) for t in tags]])
    return int(ss.generate_state(1, np.uint64)[0])


# Tag values for derive_seed; adapt runs use (_SEED_ADAPT, adapt_index).
_SEED_INITIAL_SOLVER = 0
_SEED_INITIAL_SAMPLE = 1
_SEED_ADAPT = 2


@dataclass
class SessionState:
    scene: Scene
    scene_ref: str
    mode: Mode
    config: SolverConfig
    tau_lower: float
    tau_upper: float
    delta_sign: DeltaSign
    current: Layout
    initial: Layout
    history: list[AdjustmentRecord] = field(default_factory=list)
    last_assignment: PriorityAssignment | None = None
    last_archive: ParetoArchive | None = None
    diagnostics: list[dict] = field(default_factory=list)
    transcript_ops: list[dict] = field(default_factory=list)
    moved_total: int = 0
    adapt_count: int = 0
    pending: int = 0

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def iteration(self) -> int:
        return len(self.history)


def archive_hypervolume(archive: ParetoArchive) -> float:
    """Session metric: dominated volume of the archive's objective vectors."""
    ref = moo.reference_point(NUM_OBJECTIVES)
    return moo.hypervolume(
        archive.objectives_array(), ref,
        samples=HV_SAMPLES, seed=HV_SEED, lower=np.zeros(NUM_OBJECTIVES),
    )


def start_session(scene: Scene, mode: Mode, config: SolverConfig, *,
                  tau_lower: float = DEFAULT_TAU_LOWER,
                  tau_upper: float = DEFAULT_TAU_UPPER,
                  delta_sign: DeltaSign = DeltaSign.IMPROVEMENT,
                  scene_ref: str = "inline") -> SessionState:
    """Run the initial solver once and sample one archive member as the layout.

    Both the solver sub-seed and the sampling sub-seed derive only from the
    session seed, so different modes with equal seeds start identically.
    """
    mode = Mode(mode)
    initial_config = replace(config, seed=derive_seed(config.seed, _SEED_INITIAL_SOLVER))
    archive = run_nsga2(scene, initial_config)
    sampler = np.random.default_rng(derive_seed(config.seed, _SEED_INITIAL_SAMPLE))
    chosen = archive.solutions[int(sampler.integers(len(archive.solutions)))]
    return SessionState(
        scene=scene,
        scene_ref=scene_ref,
        mode=mode,
        config=config,
        tau_lower=tau_lower,
        tau_upper=tau_upper,
        delta_sign=delta_sign,
        current=chosen.decision,
        initial=chosen.decision,
        last_archive=archive,
    )


def submit_moves(state: SessionState, moves: Mapping[str, tuple[float, float, float]]) -> SessionState:
    """Apply user moves; optimizer modes also record an adjustment.

    Manual allows 1..N moves; pareto_select/preference allow 1..3. Infeasible
    positions or bad counts reject the call and leave the state unchanged.
    """
    if not moves:
        raise SessionError("at least one move is required")
    scene = state.scene
    unknown = [wid for wid in moves if wid not in scene.widget_index]
    if unknown:
        raise SessionError(f"unknown widget ids: {unknown}")
    if state.mode is not Mode.MANUAL and len(moves) > MAX_OPTIMIZER_MOVES:
        raise SessionError(
            f"{state.mode.value} accepts between 1 and {MAX_OPTIMIZER_MOVES} moves per "
            f"iteration, got {len(moves)}"
        )
    for wid, pos in moves.items():
        if not bool(scene.region.contains(np.asarray(pos, dtype=float))):
            raise SessionError(f"position for widget {wid!r} is outside the placement region")

    before = state.current
    after = before.replace(moves)
    if state.mode is not Mode.MANUAL:
        delta = compute_delta(scene, before, after, moves.keys(), sign=state.delta_sign)
        record = AdjustmentRecord(
            t=len(state.history) + 1,
            moved_ids=frozenset(moves),
            before=before,
            after=after,
            delta=delta,
        )
        state.history.append(record)
        state.pending += 1
    state.current = after
    state.moved_total += len(moves)
    state.transcript_ops.append(
        {"op": "moves", "moves": {wid: list(map(float, pos)) for wid, pos in sorted(moves.items())}}
    )
    return state


def adapt(state: SessionState, *, progress: ProgressFn | None = None,
          track_progress: bool = False) -> SessionState:
    """Infer priorities (preference mode), re-solve from scratch, select the
    nearest candidate, and replace the whole layout with it.

    Raises SessionError in manual mode or with no recorded adjustment since the
    last adapt; a cancelled solver run propagates SolverCancelled and leaves
    the state at the last committed iteration.
    """
    if state.mode is Mode.MANUAL:
        raise SessionError("adapt is not supported in manual mode")
    if state.pending < 1:
        raise SessionError("adapt requires at least one recorded adjustment since the last adapt")

    cfg = replace(state.config, seed=derive_seed(state.seed, _SEED_ADAPT, state.adapt_count))
    assignment: PriorityAssignment | None = None
    delta_bar: tuple[float, ...] | None = None
    if state.mode is Mode.PREFERENCE:
        delta_bar = aggregate_deltas(state.history)
        assignment = assign_priorities(delta_bar, state.tau_lower, state.tau_upper,
                                       sign=state.delta_sign)
        archive = run_plnsga2(state.scene, assignment, cfg,
                              progress=progress, track_progress=track_progress)
    else:
        archive = run_nsga2(state.scene, cfg, progress=progress, track_progress=track_progress)

    last = state.history[-1]
    ref = make_reference(state.scene, last.after, last.moved_ids)
    index, distance = nearest_index(state.scene, archive, ref)
    chosen = archive.solutions[index]

    entry: dict = {
        "iteration": len(state.history),
        "adapt_index": state.adapt_count,
        "mode": state.mode.value,
        "archive_size": len(archive.solutions),
        "candidate_index": index,
        "distance": distance,
        "reference": list(ref.values),
        "moved_ids": sorted(ref.moved_ids),
    }
    if assignment is not None:
        entry["delta"] = list(delta_bar)
        entry["assignment"] = {
            "groups": [list(g) for g in assignment.groups],
            "labels": list(assignment.labels),
        }
        high = assignment.groups[0] if assignment.labels and assignment.labels[0] == "high" else None
        if high:
            entry["distance_high"] = distance_to_front(state.scene, archive, ref, high)

    state.diagnostics.append(entry)
    state.current = chosen.decision
    state.last_archive = archive
    state.last_assignment = assignment
    state.adapt_count += 1
    state.pending = 0
    state.transcript_ops.append({"op": "adapt"})
    return state


def finish(state: SessionState) -> dict:
    """Final layout plus session metrics, as a deterministic JSON-safe report."""
    report = {
        "mode": state.mode.value,
        "seed": state.seed,
        "scene": state.scene_ref,
        "iterations": len(state.history),
        "adaptations": state.adapt_count,
        "moved_elements": state.moved_total,
        "distances": [
            {
                "iteration": entry["iteration"],
                "distance": entry["distance"],
                **({"distance_high": entry["distance_high"]} if "distance_high" in entry else {}),
            }
            for entry in state.diagnostics
        ],
        "hypervolume": archive_hypervolume(state.last_archive) if state.last_archive else None,
        "initial_layout": {wid: list(pos) for wid, pos in sorted(state.initial.positions.items())},
        "final_layout": {wid: list(pos) for wid, pos in sorted(state.current.positions.items())},
    }
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# Transcripts
# ---------------------------------------------------------------------------

TRANSCRIPT_VERSION = 1


def scene_digest(scene: Scene) -> str:
    return hashlib.sha256(scene_to_json(scene).encode()).hexdigest()


def transcript_dict(state: SessionState) -> dict:
    return {
        "version": TRANSCRIPT_VERSION,
        "scene": state.scene_ref,
        "scene_sha256": scene_digest(state.scene),
        "mode": state.mode.value,
        "seed": state.seed,
        "config": {
            "population_size": state.config.population_size,
            "generations": state.config.generations,
            "crossover_eta": state.config.crossover_eta,
            "crossover_prob": state.config.crossover_prob,
            "mutation_eta": state.config.mutation_eta,
            "mutation_prob": state.config.mutation_prob,
        },
        "tau_lower": state.tau_lower,
        "tau_upper": state.tau_upper,
        "delta_sign": state.delta_sign.value,
        "ops": list(state.transcript_ops),
    }


def save_transcript(state: SessionState, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(transcript_dict(state), sort_keys=True, indent=2))
    return path


def replay_transcript(source: str | Path | Mapping, *,
                      scene: Scene | None = None,
                      scenes_dir: Path | None = None) -> tuple[SessionState, dict]:
    """Re-run a recorded session; returns (state, finish report).

    The scene is resolved from the transcript reference unless passed in; its
    digest must match the recorded one.
    """
    from .scene import resolve_scene

    if isinstance(source, Mapping):
        doc = dict(source)
    else:
        doc = json.loads(Path(source).read_text())
    if doc.get("version") != TRANSCRIPT_VERSION:
        raise SessionError(f"unsupported transcript version {doc.get('version')!r}")
    if scene is None:
        scene, _ = resolve_scene(doc["scene"], scenes_dir)
    if scene_digest(scene) != doc["scene_sha256"]:
        raise SessionError("scene digest mismatch: transcript was recorded for a different scene")

    config = SolverConfig(seed=int(doc["seed"]), **doc["config"])
    state = start_session(
        scene, Mode(doc["mode"]), config,
        tau_lower=float(doc["tau_lower"]),
        tau_upper=float(doc["tau_upper"]),
        delta_sign=DeltaSign(doc["delta_sign"]),
        scene_ref=str(doc["scene"]),
    )
    for op in doc["ops"]:
        if op["op"] == "moves":
            submit_moves(state, {wid: tuple(pos) for wid, pos in op["moves"].items()})
        elif op["op"] == "adapt":
            adapt(state)
        else:
            raise SessionError(f"unknown transcript op {op['op']!r}")
    return state, finish(state)
