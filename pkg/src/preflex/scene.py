"""World model: user pose, widgets, physical objects, semantics, and the placement region.

A :class:`Scene` is the static description every cost term consumes; a
:class:`Layout` assigns one 3D position (meters, y up) to every widget and is
the decision vector of the optimization problem. Both are immutable values and
safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

Vec3 = tuple[float, float, float]

_UNIT_TOL = 1e-9


class SceneError(ValueError):
    """Base class for scene loading problems."""


class SceneParseError(SceneError):
    """The document does not match the scene schema (names the offending field)."""


class SceneValidationError(SceneError):
    """The document parses but violates a scene invariant (names the invariant)."""


class LayoutMismatchError(SceneError):
    """Layout widget ids do not match the scene's widget ids."""


def _as_vec3(raw, field: str) -> Vec3:
    try:
        x, y, z = raw
        return (float(x), float(y), float(z))
    except (TypeError, ValueError) as exc:
        raise SceneParseError(f"{field}: expected a list of 3 numbers, got {raw!r}") from exc


@dataclass(frozen=True)
class UserPose:
    eye_position: Vec3
    gaze_direction: Vec3
    shoulder_position: Vec3

    def __post_init__(self):
        norm = float(np.linalg.norm(self.gaze_direction))
        if abs(norm - 1.0) > _UNIT_TOL:
            raise SceneValidationError(
                f"gaze_direction must be a unit vector (norm={norm!r})"
            )
        if not self.shoulder_position[1] < self.eye_position[1]:
            raise SceneValidationError(
                "shoulder_position.y must be below eye_position.y"
            )


@dataclass(frozen=True)
class Widget:
    id: str
    extent: tuple[float, float]  # width x height, meters
    p_obs: float
    p_int: float

    def __post_init__(self):
        if not 0.0 <= self.p_obs <= 1.0:
            raise SceneValidationError(f"widget {self.id!r}: p_obs must be in [0, 1], got {self.p_obs}")
        if not 0.0 <= self.p_int <= 1.0:
            raise SceneValidationError(f"widget {self.id!r}: p_int must be in [0, 1], got {self.p_int}")
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise SceneValidationError(f"widget {self.id!r}: extent must be positive")


@dataclass(frozen=True)
class PhysicalObject:
    id: str
    position: Vec3


@dataclass(frozen=True)
class SemanticCostTable:
    """Association cost in [0, 1] for every (widget id, object id) pair."""

    entries: Mapping[tuple[str, str], float]

    def cost(self, widget_id: str, object_id: str) -> float:
        return self.entries[(widget_id, object_id)]


@dataclass(frozen=True)
class Box:
    min_corner: Vec3
    max_corner: Vec3

    def __post_init__(self):
        for axis in range(3):
            if not self.min_corner[axis] < self.max_corner[axis]:
                raise SceneValidationError(
                    f"region box must have min < max per axis (axis {axis}: "
                    f"{self.min_corner[axis]} >= {self.max_corner[axis]})"
                )

    @property
    def volume(self) -> float:
        lo, hi = np.asarray(self.min_corner), np.asarray(self.max_corner)
        return float(np.prod(hi - lo))

    def corners(self) -> np.ndarray:
        lo, hi = self.min_corner, self.max_corner
        return np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])


@dataclass(frozen=True)
class PlacementRegion:
    boxes: tuple[Box, ...]

    def __post_init__(self):
        if not self.boxes:
            raise SceneValidationError("region must contain at least one box")

    @cached_property
    def mins(self) -> np.ndarray:
        return np.array([b.min_corner for b in self.boxes])

    @cached_property
    def maxs(self) -> np.ndarray:
        return np.array([b.max_corner for b in self.boxes])

    @cached_property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.mins.min(axis=0), self.maxs.max(axis=0)

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.prod(self.maxs - self.mins, axis=1)

    @cached_property
    def centroid(self) -> np.ndarray:
        """Mean of the uniform distribution over the union (volume-weighted box centers)."""
        centers = 0.5 * (self.mins + self.maxs)
        w = self.volumes / self.volumes.sum()
        return (centers * w[:, None]).sum(axis=0)

    def corners(self) -> np.ndarray:
        return np.concatenate([b.corners() for b in self.boxes])

    def contains(self, points) -> np.ndarray:
        """Boolean mask: is each point inside at least one box (inclusive)."""
        p = np.asarray(points, dtype=float)
        inside = np.logical_and(
            (p[..., None, :] >= self.mins).all(axis=-1),
            (p[..., None, :] <= self.maxs).all(axis=-1),
        )
        return inside.any(axis=-1)

    def clamp(self, points) -> np.ndarray:
        """Project points onto the nearest box surface (first box wins ties).

        Points already inside a box are returned unchanged.
        """
        p = np.asarray(points, dtype=float)
        clamped = np.clip(p[..., None, :], self.mins, self.maxs)
        d2 = ((clamped - p[..., None, :]) ** 2).sum(axis=-1)
        best = np.argmin(d2, axis=-1)
        return np.take_along_axis(clamped, best[..., None, None], axis=-2).squeeze(-2)


@dataclass(frozen=True)
class Scene:
    user: UserPose
    widgets: tuple[Widget, ...]
    objects: tuple[PhysicalObject, ...]
    semantics: SemanticCostTable
    region: PlacementRegion

    def __post_init__(self):
        if len(self.widgets) < 1:
            raise SceneValidationError("scene must contain at least one widget")
        wids = [w.id for w in self.widgets]
        if len(set(wids)) != len(wids):
            raise SceneValidationError("widget ids must be unique within a scene")
        oids = [o.id for o in self.objects]
        if len(set(oids)) != len(oids):
            raise SceneValidationError("object ids must be unique within a scene")
        for wid in wids:
            for oid in oids:
                if (wid, oid) not in self.semantics.entries:
                    raise SceneValidationError(
                        f"semantics must cover every widget x object pair (missing ({wid!r}, {oid!r}))"
                    )
        for (wid, oid), cost in self.semantics.entries.items():
            if not 0.0 <= cost <= 1.0:
                raise SceneValidationError(
                    f"semantic cost for ({wid!r}, {oid!r}) must be in [0, 1], got {cost}"
                )

    @property
    def widget_ids(self) -> tuple[str, ...]:
        return tuple(w.id for w in self.widgets)

    @cached_property
    def widget_index(self) -> dict[str, int]:
        return {w.id: i for i, w in enumerate(self.widgets)}

    @cached_property
    def eye_array(self) -> np.ndarray:
        return np.asarray(self.user.eye_position, dtype=float)

    @cached_property
    def gaze_array(self) -> np.ndarray:
        return np.asarray(self.user.gaze_direction, dtype=float)

    @cached_property
    def shoulder_array(self) -> np.ndarray:
        return np.asarray(self.user.shoulder_position, dtype=float)

    @cached_property
    def p_obs_array(self) -> np.ndarray:
        return np.array([w.p_obs for w in self.widgets])

    @cached_property
    def p_int_array(self) -> np.ndarray:
        return np.array([w.p_int for w in self.widgets])

    @cached_property
    def object_positions(self) -> np.ndarray:
        return np.array([o.position for o in self.objects]).reshape(len(self.objects), 3)

    @cached_property
    def cost_matrix(self) -> np.ndarray:
        """(N widgets, O objects) semantic association costs."""
        m = np.zeros((len(self.widgets), len(self.objects)))
        for i, w in enumerate(self.widgets):
            for j, o in enumerate(self.objects):
                m[i, j] = self.semantics.entries[(w.id, o.id)]
        return m

    @cached_property
    def diameter(self) -> float:
        """Max distance from any region-box corner to any object (semantic normalizer)."""
        if not self.objects:
            return 0.0
        corners = self.region.corners()
        d = np.linalg.norm(corners[:, None, :] - self.object_positions[None, :, :], axis=-1)
        return float(d.max())


@dataclass(frozen=True, eq=True)
class Layout:
    """One 3D position per widget. Feasibility is checked via validate_layout."""

    positions: Mapping[str, Vec3]

    def __getitem__(self, widget_id: str) -> Vec3:
        return self.positions[widget_id]

    def ids(self) -> frozenset[str]:
        return frozenset(self.positions)

    def replace(self, moves: Mapping[str, Vec3]) -> "Layout":
        merged = dict(self.positions)
        for wid, pos in moves.items():
            merged[wid] = (float(pos[0]), float(pos[1]), float(pos[2]))
        return Layout(merged)


def layout_to_array(scene: Scene, layout: Layout) -> np.ndarray:
    """(N, 3) positions in scene widget order."""
    return np.array([layout.positions[wid] for wid in scene.widget_ids], dtype=float)


def array_to_layout(scene: Scene, positions: np.ndarray) -> Layout:
    pos = np.asarray(positions, dtype=float).reshape(len(scene.widgets), 3)
    return Layout({wid: (float(p[0]), float(p[1]), float(p[2])) for wid, p in zip(scene.widget_ids, pos)})


def validate_layout(scene: Scene, layout: Layout) -> list[str]:
    """Return a list of violations (empty means the layout is feasible).

    Raises LayoutMismatchError when the layout's widget ids differ from the
    scene's; positional violations name the offending widget.
    """
    scene_ids = set(scene.widget_ids)
    layout_ids = set(layout.positions)
    if scene_ids != layout_ids:
        missing = sorted(scene_ids - layout_ids)
        extra = sorted(layout_ids - scene_ids)
        raise LayoutMismatchError(f"layout key mismatch: missing={missing} extra={extra}")
    violations = []
    for wid in scene.widget_ids:
        if not bool(scene.region.contains(np.asarray(layout.positions[wid]))):
            violations.append(f"widget {wid!r} at {layout.positions[wid]} is outside the placement region")
    return violations


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def load_scene(source: str | Path | Mapping) -> Scene:
    """Build a validated Scene from a JSON document, file path, or parsed dict."""
    if isinstance(source, Mapping):
        doc = source
    else:
        text = str(source)
        try:
            if Path(text).is_file():
                text = Path(text).read_text()
        except OSError:
            pass  # not a path (e.g. a whole JSON document)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SceneParseError(f"invalid JSON: {exc}") from exc
    for key in ("user", "widgets", "objects", "semantics", "region"):
        if key not in doc:
            raise SceneParseError(f"missing top-level key {key!r}")

    u = doc["user"]
    for key in ("eye_position", "gaze_direction", "shoulder_position"):
        if key not in u:
            raise SceneParseError(f"user: missing field {key!r}")
    user = UserPose(
        eye_position=_as_vec3(u["eye_position"], "user.eye_position"),
        gaze_direction=_as_vec3(u["gaze_direction"], "user.gaze_direction"),
        shoulder_position=_as_vec3(u["shoulder_position"], "user.shoulder_position"),
    )

    widgets = []
    for i, w in enumerate(doc["widgets"]):
        for key in ("id", "extent", "p_obs", "p_int"):
            if key not in w:
                raise SceneParseError(f"widgets[{i}]: missing field {key!r}")
        ext = w["extent"]
        if len(ext) != 2:
            raise SceneParseError(f"widgets[{i}].extent: expected [width, height]")
        widgets.append(Widget(str(w["id"]), (float(ext[0]), float(ext[1])), float(w["p_obs"]), float(w["p_int"])))

    objects = []
    for i, o in enumerate(doc["objects"]):
        for key in ("id", "position"):
            if key not in o:
                raise SceneParseError(f"objects[{i}]: missing field {key!r}")
        objects.append(PhysicalObject(str(o["id"]), _as_vec3(o["position"], f"objects[{i}].position")))

    entries = {}
    sem = doc["semantics"]
    if not isinstance(sem, Mapping):
        raise SceneParseError("semantics: expected mapping widget id -> object id -> cost")
    for wid, row in sem.items():
        for oid, cost in row.items():
            entries[(str(wid), str(oid))] = float(cost)

    reg = doc["region"]
    if "boxes" not in reg:
        raise SceneParseError("region: missing field 'boxes'")
    boxes = []
    for i, b in enumerate(reg["boxes"]):
        for key in ("min", "max"):
            if key not in b:
                raise SceneParseError(f"region.boxes[{i}]: missing field {key!r}")
        boxes.append(Box(_as_vec3(b["min"], f"region.boxes[{i}].min"), _as_vec3(b["max"], f"region.boxes[{i}].max")))

    return Scene(
        user=user,
        widgets=tuple(widgets),
        objects=tuple(objects),
        semantics=SemanticCostTable(entries),
        region=PlacementRegion(tuple(boxes)),
    )


def serialize_scene(scene: Scene) -> dict:
    """Inverse of load_scene: load_scene(serialize_scene(s)) == s."""
    sem: dict[str, dict[str, float]] = {}
    for w in scene.widgets:
        sem[w.id] = {o.id: scene.semantics.entries[(w.id, o.id)] for o in scene.objects}
    return {
        "user": {
            "eye_position": list(scene.user.eye_position),
            "gaze_direction": list(scene.user.gaze_direction),
            "shoulder_position": list(scene.user.shoulder_position),
        },
        "widgets": [
            {"id": w.id, "extent": list(w.extent), "p_obs": w.p_obs, "p_int": w.p_int}
            for w in scene.widgets
        ],
        "objects": [{"id": o.id, "position": list(o.position)} for o in scene.objects],
        "semantics": sem,
        "region": {
            "boxes": [{"min": list(b.min_corner), "max": list(b.max_corner)} for b in scene.region.boxes]
        },
    }


def scene_to_json(scene: Scene) -> str:
    return json.dumps(serialize_scene(scene), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Bundled fixtures
# ---------------------------------------------------------------------------

def available_fixtures() -> list[str]:
    pkg = resources.files("preflex") / "scenes"
    return sorted(p.name[: -len(".json")] for p in pkg.iterdir() if p.name.endswith(".json"))


def fixture_path(name: str) -> Path:
    path = Path(str(resources.files("preflex") / "scenes" / f"{name}.json"))
    if not path.is_file():
        raise SceneError(f"unknown scene fixture {name!r} (have: {', '.join(available_fixtures())})")
    return path


def load_fixture(name: str) -> Scene:
    return load_scene(fixture_path(name))


def resolve_scene(ref: str | Path, scenes_dir: Path | None = None) -> tuple[Scene, str]:
    """Resolve a scene reference (fixture name or file path) to (Scene, canonical ref)."""
    p = Path(str(ref))
    if p.is_file():
        return load_scene(p), str(p)
    if scenes_dir is not None:
        candidate = Path(scenes_dir) / f"{ref}.json"
        if candidate.is_file():
            return load_scene(candidate), str(ref)
    try:
        return load_fixture(str(ref)), str(ref)
    except SceneError:
        raise SceneError(f"cannot resolve scene reference {str(ref)!r} (not a file or known fixture)")
