import math

import numpy as np
import pytest

from preflex.objectives import (
    EvaluationError,
    NUM_OBJECTIVES,
    Objective,
    batch_evaluate,
    evaluate_all,
    evaluate_distance_comfort,
    evaluate_field_of_view,
    evaluate_neck_strain,
    evaluate_semantic_agreement,
    evaluate_shoulder_load,
)
from preflex.scene import Layout
from preflex.solvers import SolverConfig, initialize_population

from conftest import build_scene

EYE = (0.0, 1.2, 0.0)


def layout_for(scene, **positions):
    return Layout({wid: positions[wid] for wid in scene.widget_ids})


# ---------------------------------------------------------------------------
# Neck strain
# ---------------------------------------------------------------------------

def test_neck_strain_zero_at_eye_height():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(scene, w=(0.8, 1.2, 0.4))
    assert evaluate_neck_strain(scene, layout, ["w"]) == 0.0


def test_neck_strain_one_directly_overhead():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(scene, w=(0.0, 2.5, 0.0))
    assert evaluate_neck_strain(scene, layout, ["w"]) == pytest.approx(1.0, abs=1e-12)


def test_neck_strain_two_widget_hand_value():
    # pitches pi/4 and pi/8 with weights 0.5 and 1.0:
    # (0.5 * pi/4 + 1.0 * pi/8) / (1.5 * pi/2) = 1/3
    scene = build_scene([("a", 0.5, 1.0), ("b", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(
        scene,
        a=(0.0, 1.2 + 1.0, 1.0),                  # dy = dxz = 1 -> pitch pi/4
        b=(0.0, 1.2 + math.tan(math.pi / 8), 1.0),  # pitch pi/8
    )
    assert evaluate_neck_strain(scene, layout, ["a", "b"]) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_neck_strain_zero_observation_weight():
    scene = build_scene([("w", 0.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(scene, w=(0.0, 2.5, 0.0))
    assert evaluate_neck_strain(scene, layout, ["w"]) == 0.0


def test_empty_subset_is_domain_error():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))])
    layout = layout_for(scene, w=(0, 1, 1))
    with pytest.raises(EvaluationError):
        evaluate_neck_strain(scene, layout, [])


# ---------------------------------------------------------------------------
# Shoulder load
# ---------------------------------------------------------------------------

def test_shoulder_load_zero_at_shoulder_height():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], shoulder=(0, 1.0, 0))
    layout = layout_for(scene, w=(0.5, 1.0, 0.5))
    assert evaluate_shoulder_load(scene, layout, ["w"]) == 0.0


def test_shoulder_load_one_straight_below():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], shoulder=(0, 1.0, 0))
    layout = layout_for(scene, w=(0.0, -1.0, 0.0))
    assert evaluate_shoulder_load(scene, layout, ["w"]) == pytest.approx(1.0, abs=1e-12)


def test_shoulder_load_mixed_hand_value():
    # weights 0.8 / 0.2, pitches pi/6 and pi/3:
    # (0.8 * pi/6 + 0.2 * pi/3) / (1.0 * pi/2) = 0.4
    scene = build_scene([("a", 1.0, 0.8), ("b", 1.0, 0.2)], objects=[("o", (0, 0, 1))],
                        shoulder=(0.0, 1.0, 0.0))
    layout = layout_for(
        scene,
        a=(0.0, 1.0 + math.tan(math.pi / 6), 1.0),
        b=(0.0, 1.0 + math.tan(math.pi / 3), 1.0),
    )
    assert evaluate_shoulder_load(scene, layout, ["a", "b"]) == pytest.approx(0.4, abs=1e-12)


# ---------------------------------------------------------------------------
# Distance comfort
# ---------------------------------------------------------------------------

def test_distance_comfort_zero_at_half_meter():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(scene, w=(0.0, 1.2, 0.5))
    assert evaluate_distance_comfort(scene, layout, ["w"]) == pytest.approx(0.0, abs=1e-12)


def test_distance_comfort_limit_far():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE,
                        boxes=[((-1e4, -1e4, -1e4), (1e4, 1e4, 1e4))])
    layout = layout_for(scene, w=(0.0, 1.2, 9999.0))
    assert evaluate_distance_comfort(scene, layout, ["w"]) == pytest.approx(1.0, abs=1e-6)


def test_distance_comfort_at_one_meter():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(scene, w=(0.0, 1.2, 1.0))
    expected = 1.0 - math.exp(-0.5)  # d/0.5 + 0.5/d - 2 = 0.5 at d = 1
    assert evaluate_distance_comfort(scene, layout, ["w"]) == pytest.approx(expected, abs=1e-12)


def test_distance_comfort_degenerate_zero_distance():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(scene, w=EYE)
    assert evaluate_distance_comfort(scene, layout, ["w"]) == 1.0


# ---------------------------------------------------------------------------
# Field of view
# ---------------------------------------------------------------------------

def test_fov_zero_on_gaze_ray():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(scene, w=(0.0, 1.2, 2.0))
    assert evaluate_field_of_view(scene, layout, ["w"]) == 0.0


def test_fov_one_directly_behind():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(scene, w=(0.0, 1.2, -2.0))
    assert evaluate_field_of_view(scene, layout, ["w"]) == pytest.approx(1.0, abs=1e-12)


def test_fov_inside_foveal_cone_is_free():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    theta = math.radians(4.0)
    layout = layout_for(scene, w=(math.sin(theta), 1.2, math.cos(theta)))
    assert evaluate_field_of_view(scene, layout, ["w"]) == 0.0


def test_fov_fifty_degrees():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    theta = math.radians(50.0)
    layout = layout_for(scene, w=(math.sin(theta), 1.2, math.cos(theta)))
    assert evaluate_field_of_view(scene, layout, ["w"]) == pytest.approx(45.0 / 175.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Semantic agreement
# ---------------------------------------------------------------------------

def test_semantic_zero_when_costs_zero():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0, 1, 1))])
    layout = layout_for(scene, w=(1.0, 2.0, 0.0))
    assert evaluate_semantic_agreement(scene, layout, ["w"]) == 0.0


def test_semantic_zero_when_colocated():
    scene = build_scene([("w", 1.0, 1.0)], objects=[("o", (0.0, 1.0, 1.0))],
                        semantics={("w", "o"): 1.0})
    layout = layout_for(scene, w=(0.0, 1.0, 1.0))
    assert evaluate_semantic_agreement(scene, layout, ["w"]) == 0.0


def test_semantic_two_object_hand_value():
    scene = build_scene(
        [("w", 1.0, 1.0)],
        objects=[("o1", (1.0, 0.0, 0.0)), ("o2", (0.0, 0.0, 2.0))],
        semantics={("w", "o1"): 0.5, ("w", "o2"): 0.25},
        boxes=[((-3.0, -3.0, -3.0), (3.0, 3.0, 3.0))],
    )
    pos = (0.0, 0.0, 0.0)
    layout = layout_for(scene, w=pos)
    d1, d2 = 1.0, 2.0
    diameter = max(
        math.dist(corner, obj.position)
        for box in scene.region.boxes
        for corner in box.corners().tolist()
        for obj in scene.objects
    )
    expected = (0.5 * d1 + 0.25 * d2) / ((0.5 + 0.25) * diameter)
    assert evaluate_semantic_agreement(scene, layout, ["w"]) == pytest.approx(expected, abs=1e-12)


def test_semantic_no_objects_is_domain_error():
    scene = build_scene([("w", 1.0, 1.0)])
    layout = layout_for(scene, w=(0, 1, 1))
    with pytest.raises(EvaluationError):
        evaluate_semantic_agreement(scene, layout, ["w"])


def test_semantic_translation_equivariance(rng):
    scene = build_scene(
        [("a", 1.0, 1.0), ("b", 0.5, 0.5)],
        objects=[("o1", (1.0, 0.5, 0.0)), ("o2", (0.0, 0.5, 2.0))],
        semantics={("a", "o1"): 0.7, ("a", "o2"): 0.2, ("b", "o1"): 0.1, ("b", "o2"): 0.9},
    )
    layout = layout_for(scene, a=(0.4, 1.0, 0.8), b=(-0.5, 1.5, 0.2))
    base = evaluate_semantic_agreement(scene, layout, ["a", "b"])
    for _ in range(5):
        shift = rng.uniform(-2, 2, size=3)
        shifted = build_scene(
            [("a", 1.0, 1.0), ("b", 0.5, 0.5)],
            objects=[("o1", tuple(np.add((1.0, 0.5, 0.0), shift))),
                     ("o2", tuple(np.add((0.0, 0.5, 2.0), shift)))],
            semantics={("a", "o1"): 0.7, ("a", "o2"): 0.2, ("b", "o1"): 0.1, ("b", "o2"): 0.9},
            boxes=[(tuple(np.add((-3, -3, -3), shift)), tuple(np.add((3, 3, 3), shift)))],
        )
        moved = Layout({wid: tuple(np.add(layout.positions[wid], shift)) for wid in layout.positions})
        assert evaluate_semantic_agreement(shifted, moved, ["a", "b"]) == pytest.approx(base, abs=1e-9)


# ---------------------------------------------------------------------------
# evaluate_all and shared properties
# ---------------------------------------------------------------------------

def test_evaluate_all_matches_individual_evaluators(coffee_shop):
    box = coffee_shop.region.boxes[0]
    center = tuple((lo + hi) / 2 for lo, hi in zip(box.min_corner, box.max_corner))
    layout = Layout({wid: center for wid in coffee_shop.widget_ids})
    vec = evaluate_all(coffee_shop, layout)
    assert len(vec) == NUM_OBJECTIVES
    assert vec[Objective.NECK_STRAIN] == evaluate_neck_strain(coffee_shop, layout, coffee_shop.widget_ids)
    assert vec[Objective.SHOULDER_LOAD] == evaluate_shoulder_load(coffee_shop, layout, coffee_shop.widget_ids)
    assert vec[Objective.DISTANCE_COMFORT] == evaluate_distance_comfort(coffee_shop, layout, coffee_shop.widget_ids)
    assert vec[Objective.FIELD_OF_VIEW] == evaluate_field_of_view(coffee_shop, layout, coffee_shop.widget_ids)
    assert vec[Objective.SEMANTIC_AGREEMENT] == evaluate_semantic_agreement(coffee_shop, layout, coffee_shop.widget_ids)
    assert all(0.0 <= v <= 1.0 for v in vec)


def test_all_optimum_scene_scores_zero():
    # Widget on the gaze ray at 0.5 m, at eye height, with zero interaction
    # probability and zero semantic costs: every term bottoms out.
    scene = build_scene([("w", 1.0, 0.0)], objects=[("o", (0, 0, 1))], eye=EYE)
    layout = layout_for(scene, w=(0.0, 1.2, 0.5))
    assert evaluate_all(scene, layout) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_range_fuzz_on_fixtures(coffee_shop, home_office, rng):
    for scene in (coffee_shop, home_office):
        config = SolverConfig(population_size=100, generations=0, seed=int(rng.integers(1 << 30)))
        layouts = initialize_population(scene, config)
        positions = np.stack([[layout.positions[wid] for wid in scene.widget_ids] for layout in layouts])
        for _ in range(100):
            vals = batch_evaluate(scene, positions)
            assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
            assert not np.isnan(vals).any()
            positions = scene.region.clamp(positions + rng.normal(0, 0.5, positions.shape))


def test_subset_value_between_singleton_extremes(coffee_shop, rng):
    config = SolverConfig(population_size=10, generations=0, seed=5)
    layouts = initialize_population(coffee_shop, config)
    ids = coffee_shop.widget_ids
    for layout in layouts:
        full = evaluate_all(coffee_shop, layout, ids)
        singles = [evaluate_all(coffee_shop, layout, [wid]) for wid in ids]
        for j in range(NUM_OBJECTIVES):
            values = [s[j] for s in singles]
            assert min(values) - 1e-12 <= full[j] <= max(values) + 1e-12


def test_determinism_bitwise(coffee_shop):
    config = SolverConfig(population_size=4, generations=0, seed=77)
    layout = initialize_population(coffee_shop, config)[0]
    assert evaluate_all(coffee_shop, layout) == evaluate_all(coffee_shop, layout)


def test_subset_order_irrelevant(coffee_shop):
    config = SolverConfig(population_size=4, generations=0, seed=78)
    layout = initialize_population(coffee_shop, config)[0]
    ids = list(coffee_shop.widget_ids[:4])
    assert evaluate_all(coffee_shop, layout, ids) == evaluate_all(coffee_shop, layout, list(reversed(ids)))
