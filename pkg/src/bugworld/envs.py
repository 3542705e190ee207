"""Gym-style environment API: reset/step observations with frame, bug
mask and proprioceptive state, plus runtime bug control."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import bugs as bugmod
from . import world as wm
from .bugs import BugCatalog
from .errors import EpisodeDoneError, UnknownBehaviourError, UnknownEnvError
from .geometry import Orientation, Transform, Vec3
from .levels import BuiltLevel, build_level, floor_object_id
from .meshes import box, quad
from .raster import (DEFAULT_FAR, MaskRules, RasterOverrides, Renderer,
                     TIE_PARITY_FLIP)
from .scene import Material, SceneObject, Texture
from .meshes import make_checker
from .tags import TagRegistry
from .world import (AgentBody, LevelGrid, NavAgentPolicy, NavGrid, WorldState,
                    maze_generate, open_room, step_physics, stuck_detect)

STATE_LAYOUT = ["pos_x", "pos_y", "pos_z", "yaw_deg", "pitch_deg",
                "vertical_velocity", "grounded"]

CRATE_ID = 1
POSTER_ID = 2
BARREL_ID = 3


@dataclass
class EnvConfig:
    width: int = 128
    height: int = 128
    maze_width: int = 8
    maze_height: int = 8
    step_limit: int = 10000

    @staticmethod
    def from_dict(d: Optional[dict]) -> "EnvConfig":
        cfg = EnvConfig()
        if not d:
            return cfg
        for k, v in d.items():
            if k == "resolution":
                cfg.width = cfg.height = int(v)
            elif hasattr(cfg, k):
                setattr(cfg, k, type(getattr(cfg, k))(v))
            else:
                raise ValueError(f"unknown config key: {k}")
        return cfg

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height,
                "maze_width": self.maze_width, "maze_height": self.maze_height,
                "step_limit": self.step_limit}


@dataclass
class Observation:
    frame: np.ndarray
    mask: np.ndarray
    state: list[float]


@dataclass
class StepInfo:
    step: int
    active_bugs: list[str]
    flags: dict
    done: bool


def _checker_material() -> Material:
    return Material(texture=Texture(make_checker(), name="checker"))


def _add_props(level: BuiltLevel, crate_pos: Vec3, poster_pos: Vec3,
               poster_yaw: float, barrel_pos: Optional[Vec3] = None) -> None:
    level.scene.add(SceneObject(
        id=CRATE_ID, mesh=box(0.8, 0.8, 0.8), material=_checker_material(),
        transform=Transform(crate_pos),
        primitive=("box", {"sx": 0.8, "sy": 0.8, "sz": 0.8})))
    level.scene.add(SceneObject(
        id=POSTER_ID, mesh=quad(1.5, 1.0), material=Material(color=(200, 60, 60)),
        transform=Transform(poster_pos, yaw=poster_yaw),
        primitive=("quad", {"width": 1.5, "height": 1.0})))
    if barrel_pos is not None:
        level.scene.add(SceneObject(
            id=BARREL_ID, mesh=box(0.6, 1.0, 0.6), material=Material(color=(80, 120, 80)),
            transform=Transform(barrel_pos),
            primitive=("box", {"sx": 0.6, "sy": 1.0, "sz": 0.6})))


def _build_static_room(seed: int, cfg: EnvConfig):
    grid = open_room(3, 3)
    grid.spawn_cell = (1, 1)
    level = build_level(grid)
    _add_props(level,
               crate_pos=Vec3(4.5, 0.4, 4.5),
               poster_pos=Vec3(3.0, 1.2, 0.16), poster_yaw=0.0,
               barrel_pos=Vec3(1.5, 0.5, 5.4))
    defaults = {
        "texture_missing": {"target": CRATE_ID},
        "texture_corruption": {"target": CRATE_ID},
        "geometry_corruption": {"target": CRATE_ID},
        "z_fighting": {"target": POSTER_ID},
        "geometry_clipping": {"target": BARREL_ID, "dz": 0.45},
        "boundary_hole": {"target": floor_object_id(grid, 1, 2)},
    }
    return grid, level, defaults


def _build_maze(seed: int, cfg: EnvConfig):
    grid = maze_generate(seed, cfg.maze_width, cfg.maze_height)
    grid.spawn_cell = (0, 0)
    level = build_level(grid)
    _add_props(level,
               crate_pos=Vec3(0.5, 0.4, 0.5),
               poster_pos=Vec3(0.16, 1.2, 1.0), poster_yaw=90.0)
    defaults = {
        "texture_missing": {"target": CRATE_ID},
        "texture_corruption": {"target": CRATE_ID},
        "geometry_corruption": {"target": CRATE_ID},
        "z_fighting": {"target": POSTER_ID},
        "geometry_clipping": {"target": CRATE_ID, "dz": -0.45},
        "boundary_hole": {"target": floor_object_id(grid, 0, 1)},
    }
    return grid, level, defaults


SHAFT_CELL = (2, 2)
SHAFT_DEPTH = 3.0


def _build_getting_stuck(seed: int, cfg: EnvConfig):
    grid = open_room(5, 5)
    grid.spawn_cell = (0, 0)
    grid.floor_h[SHAFT_CELL] = -SHAFT_DEPTH
    grid.hazard_cells.add(SHAFT_CELL)
    level = build_level(grid)
    _add_props(level,
               crate_pos=Vec3(0.5, 0.4, 2.5),
               poster_pos=Vec3(2.0, 1.2, 0.16), poster_yaw=0.0,
               barrel_pos=Vec3(8.5, 0.5, 9.4))
    defaults = {
        "texture_missing": {"target": CRATE_ID},
        "texture_corruption": {"target": CRATE_ID},
        "geometry_corruption": {"target": CRATE_ID},
        "z_fighting": {"target": POSTER_ID},
        "geometry_clipping": {"target": BARREL_ID, "dz": 0.45},
        "boundary_hole": {"target": floor_object_id(grid, 0, 3)},
    }
    return grid, level, defaults


ENV_BUILDERS = {
    "StaticRoom-v0": _build_static_room,
    "Maze-v0": _build_maze,
    "GettingStuck-v0": _build_getting_stuck,
}

ENV_IDS = list(ENV_BUILDERS)

BEHAVIOURS = ("nav", "external")


class Env:
    """One simulator instance: world + bug catalog + renderer."""

    def __init__(self, env_id: str, config: Optional[EnvConfig] = None):
        if env_id not in ENV_BUILDERS:
            raise UnknownEnvError(env_id)
        self.env_id = env_id
        self.config = config or EnvConfig()
        self.renderer = Renderer(self.config.width, self.config.height)
        self.registry = TagRegistry()
        # defaults that do not depend on the level seed
        grid, level, defaults = ENV_BUILDERS[env_id](0, self.config)
        self.catalog = BugCatalog(self.registry, defaults)
        self._lut = self.registry.color_lut()
        self.behaviour = "external"
        self.world: Optional[WorldState] = None
        self.scene = None
        self.nav: Optional[NavGrid] = None
        self.policy: Optional[NavAgentPolicy] = None
        self.done = False
        self.episode_seed = 0
        self._prev_frame: Optional[np.ndarray] = None
        self._pristine_scene_doc: Optional[dict] = None

    # -- lifecycle -------------------------------------------------------

    def reset(self, seed: int = 0) -> Observation:
        self.episode_seed = int(seed)
        grid, level, _ = ENV_BUILDERS[self.env_id](self.episode_seed, self.config)
        self.grid = grid
        self.scene = level.scene
        self.level = level
        self._pristine_scene_doc = level.scene.to_document()
        sx, sz = grid.cell_center(*grid.spawn_cell)
        sy = float(grid.floor_h[grid.spawn_cell]) + wm.AGENT_RADIUS
        body = AgentBody(position=Vec3(sx, sy, sz), orientation=Orientation(0, 0))
        self.world = WorldState(grid=grid, walls=level.walls, body=body,
                                episode_seed=self.episode_seed)
        self.nav = NavGrid(grid)
        self.policy = NavAgentPolicy(
            self.nav, bugmod.bug_rng(self.episode_seed, "nav_policy"))
        self.done = False
        self.step_index = 0
        self._prev_frame = None
        for st in self.catalog.states.values():
            st.scratch.clear()
        self.catalog.reapply_scene_phase(self.scene, self.world, self.episode_seed)
        self._sync_world_flags()
        frame, mask = self._render_observation()
        return Observation(frame, mask, self._state_vector())

    def scene_document(self) -> dict:
        """Pristine (pre-bug) scene as built at the last reset."""
        return self._pristine_scene_doc

    # -- bug control -------------------------------------------------------

    def set_bug(self, name: str, enabled: bool, params: Optional[dict] = None) -> None:
        self.catalog.set_bug(name, enabled, params, scene=self.scene,
                             world=self.world, episode_seed=self.episode_seed)
        self._sync_world_flags()

    def list_bugs(self) -> list[dict]:
        return self.catalog.list()

    def set_behaviour(self, name: str) -> None:
        if name not in BEHAVIOURS:
            raise UnknownBehaviourError(name)
        self.behaviour = name

    def act(self) -> int:
        if self.behaviour != "nav":
            raise UnknownBehaviourError(
                "act() requires the 'nav' behaviour; actions must be supplied externally")
        return self.policy.act(self.world)

    # -- stepping -------------------------------------------------------

    def step(self, action: int) -> tuple[Optional[Observation], StepInfo]:
        if self.world is None:
            raise RuntimeError("reset() must be called before step()")
        if self.done:
            raise EpisodeDoneError("episode is done")
        cat = self.catalog
        self._sync_world_flags()
        phys = step_physics(self.world, int(action),
                            allow_air_jump=cat.enabled("invalid_action"))
        self.step_index += 1

        flags = {"stuck": False, "out_of_bounds": False, "crash": False,
                 "invalid_action_applied": False}

        if cat.enabled("crash"):
            trig = cat.param("crash", "trigger")
            if trig and self._in_region(trig):
                flags["crash"] = True
                self.done = True
                info = StepInfo(self.step_index, cat.active_names(), flags, True)
                return None, info

        if cat.enabled("stuck"):
            flags["stuck"] = stuck_detect(
                self.world.history,
                window=int(cat.param("stuck", "window")),
                eps=float(cat.param("stuck", "eps")))
        if cat.enabled("out_of_bounds"):
            flags["out_of_bounds"] = self.world.out_of_bounds()
        if cat.enabled("invalid_action"):
            flags["invalid_action_applied"] = phys.invalid_action_applied

        frame, mask = self._render_observation(logical_flags=flags)

        if self.step_index >= self.config.step_limit:
            self.done = True
        info = StepInfo(self.step_index, cat.active_names(), flags, self.done)
        return Observation(frame, mask, self._state_vector()), info

    # -- internals -------------------------------------------------------

    def _in_region(self, region: dict) -> bool:
        p = self.world.body.position
        lo, hi = region["min"], region["max"]
        return (lo[0] <= p.x <= hi[0] and lo[1] <= p.y <= hi[1]
                and lo[2] <= p.z <= hi[2])

    def _sync_world_flags(self) -> None:
        if self.world is None:
            return
        cat = self.catalog
        self.world.no_clip = (cat.enabled("camera_clipping")
                              or cat.enabled("invalid_information_access"))

    def _overrides(self) -> tuple[RasterOverrides, MaskRules]:
        cat = self.catalog
        ov = RasterOverrides(far=DEFAULT_FAR, nominal_far=DEFAULT_FAR)
        rules = MaskRules()
        if cat.enabled("z_clipping"):
            ov.far = float(cat.param("z_clipping", "far"))
            ov.want_nominal_depth = True
            rules.zclip_tag = cat.tag("z_clipping")
        if cat.enabled("z_fighting"):
            ov.tie_rule = TIE_PARITY_FLIP
        if cat.enabled("camera_clipping"):
            ov.backface_tag = cat.tag("camera_clipping")
        elif cat.enabled("invalid_information_access"):
            ov.backface_tag = cat.tag("invalid_information_access")
        rules.backface_tag = ov.backface_tag
        if cat.enabled("boundary_hole"):
            rules.boundary_tag = cat.tag("boundary_hole")
        return ov, rules

    def _render_observation(self, logical_flags: Optional[dict] = None):
        from .raster import build_mask

        ov, rules = self._overrides()
        body = self.world.body
        cam = self.renderer.camera(body.eye(), body.orientation)
        fd = self.renderer.render(self.scene, cam, ov, frame_index=self.step_index)
        mask = build_mask(fd, self._lut, rules)
        frame, mask = self.catalog.apply_post_phase(
            fd.frame, mask, self._prev_frame,
            self.episode_seed, self.step_index, self._lut)
        if logical_flags:
            cat = self.catalog
            for name in ("stuck", "out_of_bounds", "invalid_action"):
                key = "invalid_action_applied" if name == "invalid_action" else name
                if logical_flags.get(key):
                    mask[:] = self._lut[cat.tag(name)]
        self._prev_frame = frame.copy()
        return frame, mask

    def _state_vector(self) -> list[float]:
        b = self.world.body
        return [b.position.x, b.position.y, b.position.z,
                b.orientation.yaw, b.orientation.pitch,
                b.vertical_velocity, 1.0 if b.grounded else 0.0]


def make(env_id: str, config=None) -> Env:
    """Construct a built-in environment; all bugs start disabled."""
    if isinstance(config, dict):
        config = EnvConfig.from_dict(config)
    return Env(env_id, config)
