import numpy as np
import pytest

from preflex.scene import (
    Box,
    PhysicalObject,
    PlacementRegion,
    Scene,
    SemanticCostTable,
    UserPose,
    Widget,
    load_fixture,
)


def build_scene(widgets, objects=(), semantics=None, boxes=None,
                eye=(0.0, 1.2, 0.0), gaze=(0.0, 0.0, 1.0), shoulder=(0.0, 1.0, 0.0)):
    """Small scene factory for targeted geometry tests.

    widgets: list of (id, p_obs, p_int); objects: list of (id, position).
    semantics defaults to all-zero costs; boxes defaults to one large box
    around the user.
    """
    widget_objs = tuple(Widget(wid, (0.3, 0.3), p_obs, p_int) for wid, p_obs, p_int in widgets)
    object_objs = tuple(PhysicalObject(oid, tuple(map(float, pos))) for oid, pos in objects)
    entries = {}
    for w in widget_objs:
        for o in object_objs:
            entries[(w.id, o.id)] = 0.0
    if semantics:
        for key, cost in semantics.items():
            entries[key] = cost
    if boxes is None:
        boxes = [((-3.0, -3.0, -3.0), (3.0, 3.0, 3.0))]
    region = PlacementRegion(tuple(Box(tuple(lo), tuple(hi)) for lo, hi in boxes))
    return Scene(
        user=UserPose(eye_position=eye, gaze_direction=gaze, shoulder_position=shoulder),
        widgets=widget_objs,
        objects=object_objs,
        semantics=SemanticCostTable(entries),
        region=region,
    )


@pytest.fixture(scope="session")
def coffee_shop():
    return load_fixture("coffee_shop")


@pytest.fixture(scope="session")
def home_office():
    return load_fixture("home_office")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
