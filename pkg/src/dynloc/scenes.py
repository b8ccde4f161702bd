"""Builtin scenes and scene file I/O.

The scene file is a JSON document:

    {"workspace": {"outer": [[x, y], ...], "holes": [[[x, y], ...], ...]},
     "obstacles": [{"shape": {"outer": ..., "holes": ...},
                    "placement": [tx, ty, rot]}, ...]}

Coordinates are meters and radians; load(save(scene)) is bit-exact.
"""
from __future__ import annotations

import json
from typing import List

from .geometry import Point2, Polygon, RigidMotion, validate
from .simworld import Obstacle, Scene, random_polygon, static_trajectory


class SceneFormatError(ValueError):
    """Malformed or invalid scene/measurement input."""


BUILTIN_SCENES = ("square-room", "lab-lidar-like", "floor-plan-like")


def square_room() -> Scene:
    return Scene(Polygon([(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]))


def lab_lidar_like() -> Scene:
    """A 40-vertex nonconvex room, stand-in for a lidar-scanned lab."""
    return Scene(random_polygon(20260321, vertices=40, radius=5.0, jitter=0.45))


def _rect_cw(x0, y0, x1, y1):
    return [(x0, y0), (x0, y1), (x1, y1), (x1, y0)]


def floor_plan_like() -> Scene:
    """A multi-room floor plan: rectangular shell with interior wall slabs
    and a pillar as holes."""
    outer = [(0.0, 0.0), (16.0, 0.0), (16.0, 10.0), (0.0, 10.0)]
    holes = [
        _rect_cw(5.0, 1.2, 5.5, 6.5),
        _rect_cw(10.5, 3.5, 11.0, 8.8),
        _rect_cw(13.0, 1.5, 14.0, 2.5),
        _rect_cw(1.5, 7.0, 3.8, 7.5),
    ]
    return Scene(Polygon(outer, holes))


def builtin_scene(name: str) -> Scene:
    if name == "square-room":
        return square_room()
    if name == "lab-lidar-like":
        return lab_lidar_like()
    if name == "floor-plan-like":
        return floor_plan_like()
    raise SceneFormatError("unknown builtin scene %r" % name)


def _polygon_from_obj(obj, where: str) -> Polygon:
    if not isinstance(obj, dict) or "outer" not in obj:
        raise SceneFormatError("field '%s' must be an object with 'outer'" % where)
    try:
        poly = Polygon(obj["outer"], obj.get("holes", []))
    except (TypeError, ValueError) as exc:
        raise SceneFormatError("field '%s': %s" % (where, exc)) from exc
    v = validate(poly)
    if v is not None:
        raise SceneFormatError(
            "field '%s': invalid polygon: %s at ring %d" % (where, v.code, v.ring)
        )
    return poly


def scene_from_dict(doc: dict) -> Scene:
    if "workspace" not in doc:
        raise SceneFormatError("missing field 'workspace'")
    workspace = _polygon_from_obj(doc["workspace"], "workspace")
    obstacles: List[Obstacle] = []
    for i, entry in enumerate(doc.get("obstacles", [])):
        where = "obstacles[%d]" % i
        if "shape" not in entry:
            raise SceneFormatError("missing field '%s.shape'" % where)
        shape = _polygon_from_obj(entry["shape"], where + ".shape")
        placement = entry.get("placement", [0.0, 0.0, 0.0])
        if len(placement) != 3:
            raise SceneFormatError("field '%s.placement' must be [tx, ty, rot]" % where)
        g = RigidMotion(Point2(float(placement[0]), float(placement[1])), float(placement[2]))
        obstacles.append(Obstacle(shape, static_trajectory(g)))
    return Scene(workspace, obstacles)


def scene_to_dict(scene: Scene) -> dict:
    def poly_obj(p: Polygon):
        return {
            "outer": [[float(x), float(y)] for x, y in p.outer],
            "holes": [[[float(x), float(y)] for x, y in h] for h in p.holes],
        }

    obstacles = []
    for o in scene.obstacles:
        g = o.trajectory(0.0)
        obstacles.append(
            {
                "shape": poly_obj(o.shape),
                "placement": [g.translation.x, g.translation.y, g.rotation],
            }
        )
    return {"workspace": poly_obj(scene.workspace), "obstacles": obstacles}


def load_scene(path: str) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneFormatError(
                "%s: line %d: %s" % (path, exc.lineno, exc.msg)
            ) from exc
    return scene_from_dict(doc)


def save_scene(scene: Scene, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=1)
        fh.write("\n")


def resolve_scene(source: str, seed=None, poly_vertices=20, poly_radius=5.0, poly_jitter=0.4) -> Scene:
    """Builtin name, 'random' (needs a seed), or a scene file path."""
    if source in BUILTIN_SCENES:
        return builtin_scene(source)
    if source == "random":
        if seed is None:
            raise SceneFormatError("random scene needs a seed")
        return Scene(random_polygon(seed, poly_vertices, poly_radius, poly_jitter))
    return load_scene(source)
