"""Turn a LevelGrid into renderable scene geometry plus collision AABBs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Transform, Vec3
from .meshes import box, floor_quad
from .scene import Material, Scene, SceneObject
from .world import CELL_SIZE, LevelGrid, WALL_HALF_THICKNESS, WALL_HEIGHT

FLOOR_ID_BASE = 1000
WALL_ID_BASE = 2000

FLOOR_COLOR = (125, 125, 130)
WALL_COLOR = (165, 150, 130)
PIT_WALL_COLOR = (90, 85, 80)


@dataclass
class BuiltLevel:
    scene: Scene
    walls: list                      # collision AABBs
    floor_cell_by_id: dict           # floor object id -> (cx, cy)
    floor_id_by_cell: dict


def floor_object_id(grid: LevelGrid, cx: int, cy: int) -> int:
    return FLOOR_ID_BASE + cy * grid.width + cx


def build_level(grid: LevelGrid, wall_color=WALL_COLOR) -> BuiltLevel:
    scene = Scene()
    walls = []
    floor_cell_by_id = {}
    floor_id_by_cell = {}
    t = WALL_HALF_THICKNESS

    for cy in range(grid.height):
        for cx in range(grid.width):
            oid = floor_object_id(grid, cx, cy)
            wx, wz = grid.cell_center(cx, cy)
            fh = float(grid.floor_h[cx, cy])
            scene.add(SceneObject(
                id=oid,
                mesh=floor_quad(CELL_SIZE),
                material=Material(color=FLOOR_COLOR),
                transform=Transform(Vec3(wx, fh, wz)),
                primitive=("floor_quad", {"size": CELL_SIZE}),
            ))
            floor_cell_by_id[oid] = (cx, cy)
            floor_id_by_cell[(cx, cy)] = oid

    wall_specs = []
    # vertical walls (normal to X): between column x-1 and x, cell row y
    for cy in range(grid.height):
        for bx in range(grid.width + 1):
            closed = (bx == 0 or bx == grid.width
                      or not grid.open_e[bx - 1, cy])
            if closed:
                wall_specs.append(("x", bx, cy, 0.0))
    # horizontal walls (normal to Z): between row y-1 and y, cell column x
    for by in range(grid.height + 1):
        for cx in range(grid.width):
            closed = (by == 0 or by == grid.height
                      or not grid.open_n[cx, by - 1])
            if closed:
                wall_specs.append(("z", cx, by, 0.0))
    # pit side walls around cells whose floor is below zero
    for cy in range(grid.height):
        for cx in range(grid.width):
            fh = float(grid.floor_h[cx, cy])
            if fh >= 0.0:
                continue
            for side, bx, by in (("x", cx, cy), ("x", cx + 1, cy),
                                 ("z", cx, cy), ("z", cx, cy + 1)):
                wall_specs.append((side, bx, by, fh))

    length = CELL_SIZE + 2 * t  # overlap corners
    for idx, (axis, a, b, base_y) in enumerate(wall_specs):
        oid = WALL_ID_BASE + idx
        top = WALL_HEIGHT if base_y >= 0.0 else 0.0
        h = top - base_y
        color = wall_color if base_y >= 0.0 else PIT_WALL_COLOR
        if axis == "x":
            cxw = a * CELL_SIZE
            czw = (b + 0.5) * CELL_SIZE
            mesh_params = {"sx": 2 * t, "sy": h, "sz": length}
            aabb = (cxw - t, base_y, czw - length / 2,
                    cxw + t, top, czw + length / 2)
        else:
            cxw = (a + 0.5) * CELL_SIZE
            czw = b * CELL_SIZE
            mesh_params = {"sx": length, "sy": h, "sz": 2 * t}
            aabb = (cxw - length / 2, base_y, czw - t,
                    cxw + length / 2, top, czw + t)
        scene.add(SceneObject(
            id=oid,
            mesh=box(**mesh_params),
            material=Material(color=color),
            transform=Transform(Vec3(cxw, base_y + h / 2, czw)),
            primitive=("box", mesh_params),
        ))
        walls.append(aabb)

    return BuiltLevel(scene, walls, floor_cell_by_id, floor_id_by_cell)
