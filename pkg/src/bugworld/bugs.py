"""The injectable-bug catalog: specs, runtime state, scene mutations with
exact undo, post-processing effects and logical label conditions.

Bug names and parameter names are a stability contract (see BUGS.md);
they appear verbatim on the wire and in dataset manifests.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import TargetNotFoundError, UnknownBugError
from .geometry import Transform, Vec3
from .scene import Scene, SceneObject
from .tags import TagRegistry

SCENE = "SCENE"
RASTER = "RASTER"
POST = "POST"
LOGICAL = "LOGICAL"

MAGENTA = (255, 0, 255)
ZFIGHT_COLOR = (255, 140, 0)
ZFIGHT_ID_BASE = 90000

# (name, phases, default params)
CATALOG_SPECS = [
    ("texture_missing", (SCENE,), {"target": None}),
    ("texture_corruption", (SCENE,), {"target": None}),
    ("z_fighting", (SCENE, RASTER), {"target": None}),
    ("z_clipping", (RASTER,), {"far": 15.0}),
    ("geometry_corruption", (SCENE,), {"target": None, "amplitude": 0.3}),
    ("screen_tear", (POST,), {}),
    ("camera_clipping", (RASTER, LOGICAL), {}),
    ("black_screen", (POST,), {}),
    ("boundary_hole", (SCENE, LOGICAL), {"target": None}),
    ("geometry_clipping", (SCENE,), {"target": None, "dx": 0.0, "dy": 0.0, "dz": 0.0}),
    ("freeze", (POST,), {}),
    ("flicker", (POST,), {"probability": 0.5}),
    ("stuck", (LOGICAL,), {"window": 90, "eps": 0.05}),
    ("out_of_bounds", (LOGICAL,), {}),
    ("invalid_information_access", (LOGICAL,), {}),
    ("invalid_action", (LOGICAL,), {}),
    ("crash", (LOGICAL,), {"trigger": None}),
]

SCENE_PHASE_ORDER = [
    "texture_missing", "texture_corruption", "z_fighting",
    "geometry_corruption", "boundary_hole", "geometry_clipping",
]
POST_PHASE_ORDER = ["freeze", "screen_tear", "flicker", "black_screen"]


def _name_hash(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def bug_rng(episode_seed: int, name: str) -> np.random.Generator:
    """Per-bug stream, stable across runs (no Python hash randomization)."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([episode_seed & 0xFFFFFFFF, _name_hash(name)])))


def bug_frame_rng(episode_seed: int, name: str, frame_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([episode_seed & 0xFFFFFFFF, _name_hash(name),
                                frame_index])))


@dataclass
class BugSpec:
    name: str
    tag: int
    phases: tuple
    params: dict


@dataclass
class BugState:
    enabled: bool = False
    params: dict = field(default_factory=dict)
    scratch: dict = field(default_factory=dict)


class BugCatalog:
    """All injectable bugs for one environment instance.

    Scene-phase mutations record undo data so that disabling a bug
    restores the scene byte-exactly.
    """

    def __init__(self, registry: TagRegistry, env_defaults: Optional[dict] = None):
        self.registry = registry
        self.specs: dict[str, BugSpec] = {}
        self.states: dict[str, BugState] = {}
        self.order: list[str] = []
        env_defaults = env_defaults or {}
        for name, phases, params in CATALOG_SPECS:
            tag = registry.register(name)
            merged = dict(params)
            merged.update(env_defaults.get(name, {}))
            self.specs[name] = BugSpec(name, tag, tuple(phases), merged)
            self.states[name] = BugState(params=dict(merged))
            self.order.append(name)

    # -- queries ---------------------------------------------------------

    def list(self) -> list[dict]:
        out = []
        for name in self.order:
            spec = self.specs[name]
            st = self.states[name]
            out.append({
                "name": name,
                "tag": spec.tag,
                "phases": list(spec.phases),
                "params": dict(st.params),
                "enabled": st.enabled,
            })
        return out

    def tag(self, name: str) -> int:
        return self.specs[name].tag

    def enabled(self, name: str) -> bool:
        return self.states[name].enabled

    def active_names(self) -> list[str]:
        return [n for n in self.order if self.states[n].enabled]

    def param(self, name: str, key: str):
        return self.states[name].params.get(key)

    # -- runtime control ---------------------------------------------------

    def set_bug(self, name: str, enabled: bool, params: Optional[dict] = None,
                scene: Optional[Scene] = None, world=None,
                episode_seed: int = 0) -> None:
        if name not in self.specs:
            raise UnknownBugError(name)
        st = self.states[name]
        if params:
            st.params.update(params)
        if enabled == st.enabled:
            if enabled and params and SCENE in self.specs[name].phases:
                # re-apply with the new params
                self._revert_scene(name, scene, world)
                self._apply_scene(name, scene, world, episode_seed)
            return
        if enabled:
            st.enabled = True
            if SCENE in self.specs[name].phases and scene is not None:
                self._apply_scene(name, scene, world, episode_seed)
        else:
            if SCENE in self.specs[name].phases and scene is not None:
                self._revert_scene(name, scene, world)
            st.enabled = False
            st.scratch.clear()

    def reapply_scene_phase(self, scene: Scene, world, episode_seed: int) -> None:
        """Called on reset: the scene was rebuilt, so apply all enabled
        scene-phase bugs to the fresh scene."""
        for name in SCENE_PHASE_ORDER:
            st = self.states[name]
            if st.enabled:
                st.scratch.clear()
                self._apply_scene(name, scene, world, episode_seed)

    # -- scene phase -------------------------------------------------------

    def _target(self, name: str, scene: Scene) -> SceneObject:
        tid = self.states[name].params.get("target")
        obj = scene.get(tid) if tid is not None else None
        if obj is None:
            raise TargetNotFoundError(f"{name}: target {tid!r} not in scene")
        return obj

    def _apply_scene(self, name: str, scene: Scene, world, episode_seed: int) -> None:
        st = self.states[name]
        tag = self.specs[name].tag
        rng = bug_rng(episode_seed, name)
        if name == "texture_missing":
            obj = self._target(name, scene)
            tex = obj.material.texture
            if tex is None:
                raise TargetNotFoundError(f"{name}: target {obj.id} has no texture")
            st.scratch["texels"] = tex.texels.copy()
            st.scratch["obj"] = obj.id
            st.scratch["tag_was"] = obj.bug_tag
            tex.texels[:] = np.array(MAGENTA, dtype=np.uint8)
            obj.bug_tag = tag
        elif name == "texture_corruption":
            obj = self._target(name, scene)
            tex = obj.material.texture
            if tex is None:
                raise TargetNotFoundError(f"{name}: target {obj.id} has no texture")
            st.scratch["texels"] = tex.texels.copy()
            st.scratch["obj"] = obj.id
            st.scratch["tag_was"] = obj.bug_tag
            flat = tex.texels.reshape(-1, 3)
            perm = rng.permutation(len(flat))
            tex.texels[:] = flat[perm].reshape(tex.texels.shape)
            obj.bug_tag = tag
        elif name == "z_fighting":
            obj = self._target(name, scene)
            dup = SceneObject(
                id=ZFIGHT_ID_BASE + tag,
                mesh=obj.mesh,
                material=_flat_material(),
                transform=Transform(
                    Vec3(obj.transform.translation.x,
                         obj.transform.translation.y,
                         obj.transform.translation.z),
                    obj.transform.yaw, obj.transform.scale),
                bug_tag=tag,
                primitive=obj.primitive,
            )
            scene.add(dup)
            st.scratch["dup"] = dup.id
        elif name == "geometry_corruption":
            obj = self._target(name, scene)
            amp = float(st.params.get("amplitude", 0.3))
            st.scratch["verts"] = obj.mesh.vertices.copy()
            st.scratch["obj"] = obj.id
            st.scratch["tag_was"] = obj.bug_tag
            obj.mesh.vertices += rng.uniform(-amp, amp, obj.mesh.vertices.shape)
            obj.bug_tag = tag
            obj.invalidate()
        elif name == "boundary_hole":
            obj = self._target(name, scene)
            removed, idx = scene.remove(obj.id)
            st.scratch["obj"] = removed
            st.scratch["index"] = idx
            if world is not None:
                cell = world.grid.cell_of(removed.transform.translation.x,
                                          removed.transform.translation.z)
                st.scratch["cell"] = cell
                world.hole_cells.add(cell)
        elif name == "geometry_clipping":
            obj = self._target(name, scene)
            st.scratch["obj"] = obj.id
            st.scratch["tag_was"] = obj.bug_tag
            st.scratch["translation"] = (obj.transform.translation.x,
                                         obj.transform.translation.y,
                                         obj.transform.translation.z)
            obj.transform.translation.x += float(st.params.get("dx", 0.0))
            obj.transform.translation.y += float(st.params.get("dy", 0.0))
            obj.transform.translation.z += float(st.params.get("dz", 0.0))
            obj.bug_tag = tag
            obj.invalidate()

    def _revert_scene(self, name: str, scene: Scene, world) -> None:
        st = self.states[name]
        sc = st.scratch
        if not sc:
            return
        if name in ("texture_missing", "texture_corruption"):
            obj = scene.get(sc["obj"])
            obj.material.texture.texels[:] = sc["texels"]
            obj.bug_tag = sc["tag_was"]
        elif name == "z_fighting":
            scene.remove(sc["dup"])
        elif name == "geometry_corruption":
            obj = scene.get(sc["obj"])
            obj.mesh.vertices[:] = sc["verts"]
            obj.bug_tag = sc["tag_was"]
            obj.invalidate()
        elif name == "boundary_hole":
            scene.add(sc["obj"], index=sc["index"])
            if world is not None and "cell" in sc:
                world.hole_cells.discard(sc["cell"])
        elif name == "geometry_clipping":
            obj = scene.get(sc["obj"])
            tx, ty, tz = sc["translation"]
            obj.transform.translation.x = tx
            obj.transform.translation.y = ty
            obj.transform.translation.z = tz
            obj.bug_tag = sc["tag_was"]
            obj.invalidate()
        st.scratch.clear()

    # -- post phase ----------------------------------------------------------

    def apply_post_phase(self, frame: np.ndarray, mask: np.ndarray,
                         prev_frame: Optional[np.ndarray],
                         episode_seed: int, frame_index: int,
                         color_lut: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Fixed order: freeze -> screen_tear -> flicker -> black_screen.
        Later stages see earlier output; the mask is updated in lockstep."""
        h = frame.shape[0]
        for name in POST_PHASE_ORDER:
            st = self.states[name]
            if name == "freeze":
                if not st.enabled:
                    st.scratch.pop("frame", None)
                    continue
                if "frame" not in st.scratch:
                    st.scratch["frame"] = frame.copy()
                frame = st.scratch["frame"].copy()
                mask[:] = color_lut[self.specs[name].tag]
            elif not st.enabled:
                continue
            elif name == "screen_tear":
                if prev_frame is None:
                    continue
                rng = bug_frame_rng(episode_seed, name, frame_index)
                row = int(rng.integers(h // 4, 3 * h // 4))
                frame[row:] = prev_frame[row:]
                mask[row:] = color_lut[self.specs[name].tag]
            elif name == "flicker":
                rng = bug_frame_rng(episode_seed, name, frame_index)
                if rng.random() < float(st.params.get("probability", 0.5)):
                    frame[:] = 0
                    mask[:] = color_lut[self.specs[name].tag]
            elif name == "black_screen":
                frame[:] = 0
                mask[:] = color_lut[self.specs[name].tag]
        return frame, mask


def _flat_material():
    from .scene import Material

    return Material(color=ZFIGHT_COLOR)
