"""Scene graph: objects, materials, textures, skybox, JSON serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import TriMesh, Transform, Vec3
from .meshes import build_primitive, build_texture

SCENE_FORMAT_VERSION = 1


@dataclass
class Texture:
    """Row-major RGB8 texels, shape (height, width, 3)."""

    texels: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.texels = np.ascontiguousarray(self.texels, dtype=np.uint8)
        if self.texels.ndim != 3 or self.texels.shape[2] != 3:
            raise ValueError("texture must be (h, w, 3) RGB8")

    @property
    def width(self) -> int:
        return self.texels.shape[1]

    @property
    def height(self) -> int:
        return self.texels.shape[0]


@dataclass
class Material:
    texture: Optional[Texture] = None
    color: tuple[int, int, int] = (200, 200, 200)

    def describe(self) -> dict:
        if self.texture is not None:
            return {"kind": "texture", "name": self.texture.name}
        return {"kind": "color", "rgb": list(self.color)}

    @staticmethod
    def from_descriptor(d: dict) -> "Material":
        if d["kind"] == "texture":
            return Material(texture=Texture(build_texture(d["name"]), name=d["name"]))
        return Material(color=tuple(d["rgb"]))


@dataclass
class SceneObject:
    id: int
    mesh: TriMesh
    material: Material
    transform: Transform
    bug_tag: int = 0
    primitive: tuple[str, dict] = ("", {})

    _world_vertices: Optional[np.ndarray] = field(default=None, repr=False)
    _bound: Optional[tuple[np.ndarray, float]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.transform.scale <= 0:
            raise ValueError("scale must be positive")

    def invalidate(self) -> None:
        self._world_vertices = None
        self._bound = None

    def world_vertices(self) -> np.ndarray:
        if self._world_vertices is None:
            self._world_vertices = self.transform.apply_array(self.mesh.vertices)
        return self._world_vertices

    def bounding_sphere(self) -> tuple[np.ndarray, float]:
        """World-space (center, radius) enclosing all vertices."""
        if self._bound is None:
            w = self.world_vertices()
            lo = w.min(axis=0)
            hi = w.max(axis=0)
            center = (lo + hi) / 2.0
            radius = float(np.linalg.norm(hi - center))
            self._bound = (center, radius)
        return self._bound


@dataclass
class Scene:
    skybox_horizon: tuple[int, int, int] = (150, 180, 225)
    skybox_zenith: tuple[int, int, int] = (60, 95, 200)
    floor_height: float = 0.0

    def __post_init__(self):
        self._objects: list[SceneObject] = []
        self._by_id: dict[int, SceneObject] = {}

    @property
    def objects(self) -> list[SceneObject]:
        return self._objects

    def get(self, obj_id: int) -> Optional[SceneObject]:
        return self._by_id.get(obj_id)

    def add(self, obj: SceneObject, index: Optional[int] = None) -> None:
        if obj.id in self._by_id:
            raise ValueError(f"duplicate object id: {obj.id}")
        if index is None:
            self._objects.append(obj)
        else:
            self._objects.insert(index, obj)
        self._by_id[obj.id] = obj

    def remove(self, obj_id: int) -> tuple[SceneObject, int]:
        """Remove object, returning it and its list position for undo."""
        obj = self._by_id.pop(obj_id)
        idx = self._objects.index(obj)
        self._objects.pop(idx)
        return obj, idx

    def draw_order(self) -> list[SceneObject]:
        return sorted(self._objects, key=lambda o: o.id)

    def max_id(self) -> int:
        return max(self._by_id) if self._by_id else 0

    def to_document(self) -> dict:
        objs = []
        for o in self.draw_order():
            objs.append({
                "id": o.id,
                "primitive": {"name": o.primitive[0], "params": o.primitive[1]},
                "material": o.material.describe(),
                "transform": {
                    "translation": [o.transform.translation.x,
                                    o.transform.translation.y,
                                    o.transform.translation.z],
                    "yaw": o.transform.yaw,
                    "scale": o.transform.scale,
                },
                "bug_tag": o.bug_tag,
            })
        return {
            "version": SCENE_FORMAT_VERSION,
            "skybox": {"horizon": list(self.skybox_horizon),
                       "zenith": list(self.skybox_zenith)},
            "floor_height": self.floor_height,
            "objects": objs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=2)

    @staticmethod
    def from_document(doc: dict) -> "Scene":
        if doc.get("version") != SCENE_FORMAT_VERSION:
            raise ValueError(f"unsupported scene version: {doc.get('version')}")
        scene = Scene(
            skybox_horizon=tuple(doc["skybox"]["horizon"]),
            skybox_zenith=tuple(doc["skybox"]["zenith"]),
            floor_height=doc["floor_height"],
        )
        for od in doc["objects"]:
            prim = od["primitive"]
            mesh = build_primitive(prim["name"], prim["params"])
            t = od["transform"]
            scene.add(SceneObject(
                id=od["id"],
                mesh=mesh,
                material=Material.from_descriptor(od["material"]),
                transform=Transform(Vec3(*t["translation"]), t["yaw"], t["scale"]),
                bug_tag=od["bug_tag"],
                primitive=(prim["name"], dict(prim["params"])),
            ))
        return scene

    @staticmethod
    def from_json(text: str) -> "Scene":
        return Scene.from_document(json.loads(text))
