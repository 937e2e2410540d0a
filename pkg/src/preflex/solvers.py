"""Evolutionary layout search: one elitist generational engine, two entry points.

``run_nsga2`` ranks by plain non-dominated fronts plus crowding distance;
``run_plnsga2`` ranks by a vector of per-priority-level front indices compared
lexicographically, then crowding. Both share the same engine - a single
priority level containing every objective reduces the PL ranking to plain
NSGA-II exactly, so the two produce bit-identical archives for equal seeds.

Decision encoding is the flat vector of 3N widget coordinates. Genetic
operators work inside the region's bounding box and every candidate is
projected back onto the placement region (nearest box surface), so all
evaluated layouts are feasible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .moo import EvaluatedSolution, MooError, crowding_distance, front_ranks, nondominated_mask
from .objectives import NUM_OBJECTIVES, batch_evaluate
from .scene import Scene, array_to_layout, layout_to_array


class SolverCancelled(RuntimeError):
    """Raised when a progress callback asks the run to stop."""


@dataclass(frozen=True)
class SolverConfig:
    population_size: int = 100
    generations: int = 80
    crossover_eta: float = 15.0
    crossover_prob: float = 0.9
    mutation_eta: float = 20.0
    mutation_prob: float | None = None  # default 1 / (3N) at run time
    seed: int = 0

    def __post_init__(self):
        if self.population_size <= 0 or self.population_size % 2 != 0:
            raise ValueError(f"population_size must be positive and even, got {self.population_size}")
        if self.generations < 0:
            raise ValueError(f"generations must be >= 0, got {self.generations}")
        if self.crossover_eta <= 0 or self.mutation_eta <= 0:
            raise ValueError("distribution indices must be > 0")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError(f"crossover_prob must be in [0, 1], got {self.crossover_prob}")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError(f"mutation_prob must be in [0, 1], got {self.mutation_prob}")


@dataclass(frozen=True)
class PriorityAssignment:
    """Ordered objective-index groups, highest priority first.

    Groups must be disjoint and non-empty; together they must cover every
    objective index of the problem they are used with. ``labels`` names each
    group (e.g. high/mid/low); ``thresholds`` and ``delta_snapshot`` record how
    the assignment was derived, when it came from preference inference.
    """

    groups: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] = ()
    thresholds: tuple[float, float] | None = None
    delta_snapshot: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.groups:
            raise ValueError("priority assignment needs at least one group")
        seen: set[int] = set()
        for g in self.groups:
            if not g:
                raise ValueError("priority groups must be non-empty (drop empty groups)")
            if seen & set(g):
                raise ValueError("priority groups must be disjoint")
            seen |= set(g)
        if self.labels and len(self.labels) != len(self.groups):
            raise ValueError("labels must match groups")

    @property
    def levels(self) -> int:
        return len(self.groups)

    def covered(self) -> frozenset[int]:
        return frozenset(i for g in self.groups for i in g)

    def validate_for(self, num_objectives: int) -> None:
        if self.covered() != frozenset(range(num_objectives)):
            raise ValueError(
                f"priority groups must partition objective indices 0..{num_objectives - 1}, "
                f"got {sorted(self.covered())}"
            )

    def label_of(self, objective_index: int) -> str:
        for g, group in enumerate(self.groups):
            if objective_index in group:
                return self.labels[g] if self.labels else str(g)
        raise KeyError(objective_index)

    @classmethod
    def single_level(cls, num_objectives: int) -> "PriorityAssignment":
        return cls(groups=(tuple(range(num_objectives)),), labels=("all",))


PLRankVector = tuple[int, ...]


def pl_rank(population, assignment: PriorityAssignment) -> list[PLRankVector]:
    """Per-solution vector of non-dominated front indices, one per priority level."""
    points = np.asarray(population, dtype=float)
    if len(points) == 0:
        raise MooError("population must be non-empty")
    assignment.validate_for(points.shape[1])
    per_level = [front_ranks(points[:, list(group)]) for group in assignment.groups]
    ranks = np.stack(per_level, axis=1)
    return [tuple(int(r) for r in row) for row in ranks]


def pl_compare(a: tuple[PLRankVector, float], b: tuple[PLRankVector, float]) -> int:
    """Order two (rank vector, crowding) pairs: -1 if a first, 1 if b, 0 on full tie.

    Lower rank wins at the first differing level; on equal rank vectors the
    larger crowding distance wins. A result of 0 leaves callers to break the
    tie by stable index.
    """
    rank_a, crowd_a = a
    rank_b, crowd_b = b
    if len(rank_a) != len(rank_b):
        raise MooError(f"rank vectors differ in level count: {len(rank_a)} vs {len(rank_b)}")
    if rank_a != rank_b:
        return -1 if rank_a < rank_b else 1
    if crowd_a != crowd_b:
        return -1 if crowd_a > crowd_b else 1
    return 0


def _rank_and_crowd(objs: np.ndarray, assignment: PriorityAssignment) -> tuple[np.ndarray, np.ndarray]:
    """Rank matrix (n, levels) and crowding computed on full vectors within
    groups sharing an identical rank vector."""
    per_level = [front_ranks(objs[:, list(group)]) for group in assignment.groups]
    ranks = np.stack(per_level, axis=1)
    crowd = np.empty(len(objs))
    _, inverse = np.unique(ranks, axis=0, return_inverse=True)
    for gid in np.unique(inverse):
        members = np.flatnonzero(inverse == gid)
        crowd[members] = crowding_distance(objs[members])
    return ranks, crowd


def _total_order(ranks: np.ndarray, crowd: np.ndarray) -> np.ndarray:
    """Indices sorted by (rank vector lexicographic asc, crowding desc, index asc)."""
    keys = (-crowd,) + tuple(ranks[:, level] for level in reversed(range(ranks.shape[1])))
    return np.lexsort(keys)


# ---------------------------------------------------------------------------
# Sampling and variation
# ---------------------------------------------------------------------------

def _sample_positions(scene: Scene, count: int, rng: np.random.Generator) -> np.ndarray:
    """(count, N, 3) positions uniform over the region (boxes weighted by volume)."""
    region = scene.region
    n_widgets = len(scene.widgets)
    probs = region.volumes / region.volumes.sum()
    box_idx = rng.choice(len(region.boxes), size=(count, n_widgets), p=probs)
    lo = region.mins[box_idx]
    hi = region.maxs[box_idx]
    return lo + (hi - lo) * rng.random((count, n_widgets, 3))


def initialize_population(scene: Scene, config: SolverConfig,
                          rng: np.random.Generator | None = None):
    """population_size feasible random layouts, deterministic given config.seed."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    positions = _sample_positions(scene, config.population_size, rng)
    return [array_to_layout(scene, p) for p in positions]


def _sbx_pairs(a: np.ndarray, b: np.ndarray, config: SolverConfig,
               rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover on flat (pairs, D) parent arrays."""
    do_cross = rng.random(a.shape[0]) < config.crossover_prob
    u = rng.random(a.shape)
    exponent = 1.0 / (config.crossover_eta + 1.0)
    beta = np.where(u <= 0.5, (2.0 * u) ** exponent, (1.0 / (2.0 * (1.0 - u))) ** exponent)
    c1 = 0.5 * ((1.0 + beta) * a + (1.0 - beta) * b)
    c2 = 0.5 * ((1.0 - beta) * a + (1.0 + beta) * b)
    # Coinciding parent coordinates pass through untouched.
    mask = do_cross[:, None] & (np.abs(a - b) > 1e-14)
    return np.where(mask, c1, a), np.where(mask, c2, b)


def _mutate(x: np.ndarray, config: SolverConfig, rng: np.random.Generator,
            lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Bounded polynomial mutation on flat (n, D) arrays within [lower, upper]."""
    n, dims = x.shape
    pm = config.mutation_prob if config.mutation_prob is not None else 1.0 / dims
    do_mut = rng.random((n, dims)) < pm
    u = rng.random((n, dims))
    span = upper - lower
    delta_l = (x - lower) / span
    delta_r = (upper - x) / span
    exponent = config.mutation_eta + 1.0
    low_branch = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - delta_l) ** exponent) ** (1.0 / exponent) - 1.0
    high_branch = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - delta_r) ** exponent) ** (1.0 / exponent)
    dq = np.where(u < 0.5, low_branch, high_branch)
    mutated = np.where(do_mut, x + dq * span, x)
    return np.clip(mutated, lower, upper)


def _flat_bounds(scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = scene.region.bounding_box
    n = len(scene.widgets)
    return np.tile(lo, n), np.tile(hi, n)


def sbx_crossover(parent_a, parent_b, config: SolverConfig, rng: np.random.Generator,
                  scene: Scene):
    """Layout-level SBX; children are projected back onto the region."""
    a = layout_to_array(scene, parent_a).reshape(1, -1)
    b = layout_to_array(scene, parent_b).reshape(1, -1)
    c1, c2 = _sbx_pairs(a, b, config, rng)
    n = len(scene.widgets)
    c1 = scene.region.clamp(c1.reshape(n, 3))
    c2 = scene.region.clamp(c2.reshape(n, 3))
    return array_to_layout(scene, c1), array_to_layout(scene, c2)


def polynomial_mutation(layout, config: SolverConfig, rng: np.random.Generator,
                        scene: Scene):
    """Layout-level polynomial mutation; result is projected back onto the region."""
    lower, upper = _flat_bounds(scene)
    x = layout_to_array(scene, layout).reshape(1, -1)
    mutated = _mutate(x, config, rng, lower, upper)
    return array_to_layout(scene, scene.region.clamp(mutated.reshape(len(scene.widgets), 3)))


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

@dataclass
class GenerationReport:
    """Per-generation snapshot handed to progress callbacks."""

    generation: int
    total_generations: int
    evaluations: int
    best_rank_vector: PLRankVector
    front_size: int
    pool_objectives: np.ndarray  # combined parent+offspring pool (or initial pop at gen 0)
    survivors: np.ndarray | None  # indices into pool_objectives kept for the next generation
    rank_vectors: np.ndarray  # (len(pool), levels)


ProgressFn = Callable[[GenerationReport], "bool | None"]


@dataclass(frozen=True)
class Provenance:
    solver: str
    config: SolverConfig
    generations: int
    priority_groups: tuple[tuple[int, ...], ...]


@dataclass(eq=False)
class ParetoArchive:
    """Final best-rank-vector solutions plus run provenance.

    ``progress`` (when tracking is enabled) holds per-generation snapshots of
    the non-dominated set over all evaluations so far, for metric curves.
    """

    solutions: tuple[EvaluatedSolution, ...]
    provenance: Provenance
    progress: tuple[np.ndarray, ...] = ()

    def objectives_array(self) -> np.ndarray:
        return np.array([s.objectives for s in self.solutions])

    def __len__(self) -> int:
        return len(self.solutions)


def _cumulative_update(front: np.ndarray, batch: np.ndarray) -> np.ndarray:
    merged = np.vstack([front, batch]) if len(front) else batch
    return merged[nondominated_mask(merged)]


def _evolve(scene: Scene, config: SolverConfig, assignment: PriorityAssignment,
            solver_name: str, progress: ProgressFn | None,
            track_progress: bool) -> ParetoArchive:
    assignment.validate_for(NUM_OBJECTIVES)
    rng = np.random.default_rng(config.seed)
    n = config.population_size
    n_widgets = len(scene.widgets)
    lower, upper = _flat_bounds(scene)

    pop = _sample_positions(scene, n, rng)
    objs = batch_evaluate(scene, pop)
    evaluations = n

    snapshots: list[np.ndarray] = []
    cumulative = objs[nondominated_mask(objs)].copy() if track_progress else np.empty((0,))
    if track_progress:
        snapshots.append(cumulative.copy())

    def emit(gen: int, pool_objs: np.ndarray, survivors: np.ndarray | None,
             ranks: np.ndarray) -> None:
        if progress is None:
            return
        best = min(tuple(int(r) for r in row) for row in ranks)
        size = int(sum(1 for row in ranks if tuple(int(r) for r in row) == best))
        report = GenerationReport(
            generation=gen,
            total_generations=config.generations,
            evaluations=evaluations,
            best_rank_vector=best,
            front_size=size,
            pool_objectives=pool_objs,
            survivors=survivors,
            rank_vectors=ranks,
        )
        if progress(report) is False:
            raise SolverCancelled(f"{solver_name} cancelled at generation {gen}")

    if progress is not None:
        emit(0, objs, None, _rank_and_crowd(objs, assignment)[0])

    for gen in range(1, config.generations + 1):
        # Binary tournament on the total order (rank vector, crowding, index),
        # recomputed on the current population.
        ranks, crowd = _rank_and_crowd(objs, assignment)
        order = _total_order(ranks, crowd)
        position = np.empty(n, dtype=int)
        position[order] = np.arange(n)
        contenders = rng.integers(0, n, size=(n, 2))
        winners = np.where(
            position[contenders[:, 0]] <= position[contenders[:, 1]],
            contenders[:, 0],
            contenders[:, 1],
        )
        parents = pop[winners].reshape(n, -1)

        c1, c2 = _sbx_pairs(parents[0::2], parents[1::2], config, rng)
        children = np.empty_like(parents)
        children[0::2] = c1
        children[1::2] = c2
        children = scene.region.clamp(children.reshape(n, n_widgets, 3)).reshape(n, -1)
        children = _mutate(children, config, rng, lower, upper)
        children = scene.region.clamp(children.reshape(n, n_widgets, 3))

        child_objs = batch_evaluate(scene, children)
        evaluations += n

        pool = np.concatenate([pop, children])
        pool_objs = np.concatenate([objs, child_objs])
        pool_ranks, pool_crowd = _rank_and_crowd(pool_objs, assignment)
        take = _total_order(pool_ranks, pool_crowd)[:n]
        pop, objs = pool[take], pool_objs[take]

        if track_progress:
            cumulative = _cumulative_update(cumulative, child_objs)
            snapshots.append(cumulative.copy())
        emit(gen, pool_objs, take, pool_ranks)

    # Archive: the plain-Pareto non-dominated set of the final population. For
    # a single priority level this is exactly the final first front; for
    # multi-level runs it keeps the full candidate front instead of the
    # (often near-singleton) minimal-rank-vector group, which starves the
    # nearest-candidate selection and the hypervolume metric.
    members = np.flatnonzero(nondominated_mask(objs))
    solutions = tuple(
        EvaluatedSolution(array_to_layout(scene, pop[i]), tuple(float(v) for v in objs[i]))
        for i in members
    )
    return ParetoArchive(
        solutions=solutions,
        provenance=Provenance(solver_name, config, config.generations, assignment.groups),
        progress=tuple(snapshots),
    )


def run_nsga2(scene: Scene, config: SolverConfig, *, progress: ProgressFn | None = None,
              track_progress: bool = False) -> ParetoArchive:
    """Plain NSGA-II over layouts: returns the final first front."""
    assignment = PriorityAssignment.single_level(NUM_OBJECTIVES)
    return _evolve(scene, config, assignment, "nsga2", progress, track_progress)


def run_plnsga2(scene: Scene, assignment: PriorityAssignment, config: SolverConfig, *,
                progress: ProgressFn | None = None,
                track_progress: bool = False) -> ParetoArchive:
    """Priority-level NSGA-II: Pareto dominance within levels, lexicographic across.

    Returns the solutions whose rank vector equals the (lexicographically)
    minimal rank vector in the final population.
    """
    return _evolve(scene, config, assignment, "plnsga2", progress, track_progress)
