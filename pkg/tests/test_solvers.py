import numpy as np
import pytest

from preflex.moo import MooError, nondominated_mask
from preflex.objectives import NUM_OBJECTIVES, Objective, evaluate_all
from preflex.scene import validate_layout
from preflex.solvers import (
    ParetoArchive,
    PriorityAssignment,
    SolverCancelled,
    SolverConfig,
    initialize_population,
    pl_compare,
    pl_rank,
    polynomial_mutation,
    run_nsga2,
    run_plnsga2,
    sbx_crossover,
)

from conftest import build_scene
from oracles import bf_dominates, bf_peel_fronts

SMALL = SolverConfig(population_size=20, generations=8, seed=11)


# ---------------------------------------------------------------------------
# initialize_population
# ---------------------------------------------------------------------------

def test_init_deterministic(coffee_shop):
    a = initialize_population(coffee_shop, SMALL)
    b = initialize_population(coffee_shop, SMALL)
    assert a == b


def test_init_feasible(coffee_shop):
    for layout in initialize_population(coffee_shop, SMALL):
        assert validate_layout(coffee_shop, layout) == []


def test_init_mean_near_region_center(coffee_shop):
    config = SolverConfig(population_size=2000, generations=0, seed=4)
    rng = np.random.default_rng(config.seed)
    samples = []
    for _ in range(5):  # 10k single-widget samples total
        layouts = initialize_population(coffee_shop, config, rng)
        samples.extend(layout.positions[coffee_shop.widget_ids[0]] for layout in layouts)
    mean = np.mean(samples, axis=0)
    center = coffee_shop.region.centroid
    lo, hi = coffee_shop.region.bounding_box
    assert np.all(np.abs(mean - center) <= 0.05 * (hi - lo))


# ---------------------------------------------------------------------------
# variation operators
# ---------------------------------------------------------------------------

def test_sbx_prob_zero_returns_parents(coffee_shop, rng):
    config = SolverConfig(population_size=2, generations=1, crossover_prob=0.0, seed=1)
    a, b = initialize_population(coffee_shop, SMALL)[:2]
    c1, c2 = sbx_crossover(a, b, config, rng, coffee_shop)
    assert c1 == a and c2 == b


def test_sbx_identical_parents_fixed_point(coffee_shop, rng):
    a = initialize_population(coffee_shop, SMALL)[0]
    config = SolverConfig(population_size=2, generations=1, crossover_prob=1.0, seed=1)
    c1, c2 = sbx_crossover(a, a, config, rng, coffee_shop)
    assert c1 == a and c2 == a


def test_sbx_children_symmetric_about_midpoint():
    # Parents centered in a huge box so clamping cannot bias the children.
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))],
                        boxes=[((-100.0, -100.0, -100.0), (100.0, 100.0, 100.0))])
    config = SolverConfig(population_size=2, generations=1, crossover_prob=1.0, seed=9)
    rng = np.random.default_rng(123)
    a = {"w": (-1.0, 0.0, 0.0)}
    b = {"w": (1.0, 0.0, 0.0)}
    from preflex.scene import Layout

    sums = []
    for _ in range(10_000):
        c1, c2 = sbx_crossover(Layout(a), Layout(b), config, rng, scene)
        sums.append(c1.positions["w"][0] + c2.positions["w"][0])
        # pairwise symmetry is exact: c1 + c2 == a + b
        assert c1.positions["w"][0] + c2.positions["w"][0] == pytest.approx(0.0, abs=1e-9)
    assert np.mean(sums) == pytest.approx(0.0, abs=1e-9)


def test_mutation_prob_zero_identity(coffee_shop, rng):
    config = SolverConfig(population_size=2, generations=1, mutation_prob=0.0, seed=1)
    layout = initialize_population(coffee_shop, SMALL)[0]
    assert polynomial_mutation(layout, config, rng, coffee_shop) == layout


def test_mutation_always_feasible(coffee_shop, rng):
    config = SolverConfig(population_size=2, generations=1, mutation_prob=1.0, seed=1)
    layout = initialize_population(coffee_shop, SMALL)[0]
    for _ in range(200):
        layout = polynomial_mutation(layout, config, rng, coffee_shop)
        assert validate_layout(coffee_shop, layout) == []


def test_mutation_magnitude_shrinks_with_eta(coffee_shop):
    base = initialize_population(coffee_shop, SMALL)[0]
    base_arr = np.array([base.positions[w] for w in coffee_shop.widget_ids])
    means = []
    for eta in (5.0, 20.0, 80.0):
        config = SolverConfig(population_size=2, generations=1,
                              mutation_eta=eta, mutation_prob=1.0, seed=1)
        rng = np.random.default_rng(42)
        deltas = []
        for _ in range(300):
            mutated = polynomial_mutation(base, config, rng, coffee_shop)
            arr = np.array([mutated.positions[w] for w in coffee_shop.widget_ids])
            deltas.append(np.abs(arr - base_arr).mean())
        means.append(np.mean(deltas))
    assert means[0] > means[1] > means[2]


# ---------------------------------------------------------------------------
# pl_rank / pl_compare
# ---------------------------------------------------------------------------

def test_pl_rank_single_level_equals_plain_fronts(rng):
    pop = rng.random((30, 4)).round(1)
    pa = PriorityAssignment.single_level(4)
    ranks = pl_rank(pop, pa)
    fronts = bf_peel_fronts(pop.tolist())
    expected = {}
    for r, front in enumerate(fronts):
        for i in front:
            expected[i] = (r,)
    assert ranks == [expected[i] for i in range(len(pop))]


def test_pl_rank_spec_two_level_example():
    pa = PriorityAssignment(groups=((0,), (1,)))
    ranks = pl_rank([(0.0, 9.0), (1.0, 0.0)], pa)
    assert ranks == [(0, 1), (1, 0)]


def test_pl_rank_identical_vectors_all_zero():
    pa = PriorityAssignment(groups=((0, 1), (2,)))
    ranks = pl_rank([(0.5, 0.5, 0.5)] * 4, pa)
    assert ranks == [(0, 0)] * 4


def test_pl_rank_empty_population():
    with pytest.raises(MooError):
        pl_rank([], PriorityAssignment.single_level(2))


def test_pl_rank_matches_per_level_bruteforce(rng):
    pa = PriorityAssignment(groups=((0, 2), (1,), (3,)))
    pop = rng.random((25, 4)).round(1)
    ranks = pl_rank(pop, pa)
    for level, group in enumerate(pa.groups):
        proj = pop[:, list(group)].tolist()
        fronts = bf_peel_fronts(proj)
        for r, front in enumerate(fronts):
            for i in front:
                assert ranks[i][level] == r


def test_pl_compare_first_level_precedence():
    assert pl_compare(((0, 5), 0.0), ((1, 0), 99.0)) == -1


def test_pl_compare_crowding_breaks_rank_ties():
    assert pl_compare(((1, 1), 2.0), ((1, 1), 1.0)) == -1
    assert pl_compare(((1, 1), 1.0), ((1, 1), 2.0)) == 1


def test_pl_compare_full_tie_is_stable():
    assert pl_compare(((1, 1), 2.0), ((1, 1), 2.0)) == 0


def test_pl_compare_level_mismatch():
    with pytest.raises(MooError):
        pl_compare(((0,), 1.0), ((0, 0), 1.0))


def test_priority_assignment_validation():
    with pytest.raises(ValueError):
        PriorityAssignment(groups=((0,), (0, 1)))  # overlap
    with pytest.raises(ValueError):
        PriorityAssignment(groups=((0,), ()))  # empty group
    pa = PriorityAssignment(groups=((0, 1), (2,)))
    with pytest.raises(ValueError):
        pa.validate_for(5)  # does not cover 3, 4


# ---------------------------------------------------------------------------
# run_nsga2
# ---------------------------------------------------------------------------

def test_nsga2_zero_generations_returns_initial_front(coffee_shop):
    config = SolverConfig(population_size=20, generations=0, seed=3)
    archive = run_nsga2(coffee_shop, config)
    layouts = initialize_population(coffee_shop, config)
    objs = np.array([evaluate_all(coffee_shop, l) for l in layouts])
    expected = nondominated_mask(objs)
    assert len(archive.solutions) == int(expected.sum())
    archived = {tuple(sorted(s.decision.positions.items())) for s in archive.solutions}
    for i in np.flatnonzero(expected):
        assert tuple(sorted(layouts[i].positions.items())) in archived


def test_nsga2_archive_mutually_nondominated(coffee_shop):
    archive = run_nsga2(coffee_shop, SMALL)
    objs = [s.objectives for s in archive.solutions]
    for i, a in enumerate(objs):
        assert not any(bf_dominates(b, a) for j, b in enumerate(objs) if j != i)


def test_nsga2_deterministic(coffee_shop):
    a = run_nsga2(coffee_shop, SMALL)
    b = run_nsga2(coffee_shop, SMALL)
    assert a.solutions == b.solutions


def test_nsga2_all_generations_feasible(coffee_shop):
    seen = []

    def watch(report):
        seen.append(report.generation)
        return True

    archive = run_nsga2(coffee_shop, SMALL, progress=watch)
    assert seen == list(range(SMALL.generations + 1))
    for sol in archive.solutions:
        assert validate_layout(coffee_shop, sol.decision) == []


def test_nsga2_cumulative_hv_nondecreasing(coffee_shop):
    from preflex import moo

    config = SolverConfig(population_size=20, generations=10, seed=6)
    archive = run_nsga2(coffee_shop, config, track_progress=True)
    assert len(archive.progress) == config.generations + 1
    ref = moo.reference_point(NUM_OBJECTIVES)
    values = [
        moo.hypervolume(front, ref, samples=4000, seed=99, lower=np.zeros(NUM_OBJECTIVES))
        for front in archive.progress
    ]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_nsga2_cancellation(coffee_shop):
    def stop_at_three(report):
        return report.generation < 3

    with pytest.raises(SolverCancelled):
        run_nsga2(coffee_shop, SMALL, progress=stop_at_three)


# ---------------------------------------------------------------------------
# run_plnsga2
# ---------------------------------------------------------------------------

def test_pl_single_level_bit_identical_to_nsga2(coffee_shop):
    pa = PriorityAssignment.single_level(NUM_OBJECTIVES)
    a = run_nsga2(coffee_shop, SMALL)
    b = run_plnsga2(coffee_shop, pa, SMALL)
    assert a.solutions == b.solutions


def test_pl_semantic_priority_lowers_semantic_cost(coffee_shop):
    sem = int(Objective.SEMANTIC_AGREEMENT)
    rest = tuple(j for j in range(NUM_OBJECTIVES) if j != sem)
    pa = PriorityAssignment(groups=((sem,), rest), labels=("high", "mid"))
    config = SolverConfig(population_size=24, generations=15)
    deltas = []
    for seed in range(10):
        from dataclasses import replace

        cfg = replace(config, seed=seed)
        pl = run_plnsga2(coffee_shop, pa, cfg)
        plain = run_nsga2(coffee_shop, cfg)
        deltas.append(
            pl.objectives_array()[:, sem].mean() - plain.objectives_array()[:, sem].mean()
        )
    assert np.mean(deltas) < 0


def test_pl_precedence_never_truncates_h_dominators(rng):
    # Constructed 2-widget scene; H = the first two objectives. Any solution
    # strictly dominating another in the H projection must survive whenever
    # the dominated one does, in every generation.
    scene = build_scene(
        [("a", 1.0, 0.8), ("b", 0.6, 1.0)],
        objects=[("o", (0.5, 1.0, 1.0))],
        semantics={("a", "o"): 0.8, ("b", "o"): 0.3},
        boxes=[((-1.5, 0.2, -1.5), (1.5, 2.2, 1.5))],
    )
    pa = PriorityAssignment(groups=((0, 1), (2, 3, 4)), labels=("high", "mid"))
    config = SolverConfig(population_size=8, generations=6, seed=21)
    violations = []

    def check(report):
        if report.survivors is None:
            return True
        pool = report.pool_objectives[:, :2]
        kept = set(int(i) for i in report.survivors)
        dropped = [i for i in range(len(pool)) if i not in kept]
        for d in dropped:
            for s in kept:
                if bf_dominates(pool[d], pool[s]):
                    violations.append((report.generation, d, s))
        return True

    run_plnsga2(scene, pa, config, progress=check)
    assert violations == []


def test_pl_archive_nondominated_and_from_final_population(coffee_shop):
    pa = PriorityAssignment(groups=((3, 4), (0, 1, 2)), labels=("high", "mid"))
    archive = run_plnsga2(coffee_shop, pa, SMALL)
    objs = [s.objectives for s in archive.solutions]
    for i, a in enumerate(objs):
        assert not any(bf_dominates(b, a) for j, b in enumerate(objs) if j != i)
    assert archive.provenance.solver == "plnsga2"
    assert archive.provenance.priority_groups == pa.groups


def test_pl_deterministic(coffee_shop):
    pa = PriorityAssignment(groups=((3, 4), (0, 1, 2)))
    a = run_plnsga2(coffee_shop, pa, SMALL)
    b = run_plnsga2(coffee_shop, pa, SMALL)
    assert a.solutions == b.solutions
