"""Deterministic software renderer: player-view pass, bug-mask metadata
passes and the mask compositor share one geometry pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .geometry import Orientation, Vec3
from .scene import Scene, SceneObject, Texture

BEHIND = "BEHIND"

DEFAULT_NEAR = 0.1
DEFAULT_FAR = 100.0

_DUMMY_TEX = np.zeros((1, 1, 3), dtype=np.uint8)

# depth-tie rules
TIE_STABLE = "STABLE"
TIE_PARITY_FLIP = "PARITY_FLIP"


@dataclass
class Camera:
    position: Vec3
    orientation: Orientation
    near: float = DEFAULT_NEAR
    far: float = DEFAULT_FAR

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Rotation matrix R and eye point: view = R @ (p - eye).

        View space is right-handed, looks along -Z with +Y up.
        """
        cy = math.cos(math.radians(self.orientation.yaw))
        sy = math.sin(math.radians(self.orientation.yaw))
        cp = math.cos(math.radians(self.orientation.pitch))
        sp = math.sin(math.radians(self.orientation.pitch))
        r_yaw = np.array([
            [-cy, 0.0, sy],
            [0.0, 1.0, 0.0],
            [-sy, 0.0, -cy],
        ])
        r_pitch = np.array([
            [1.0, 0.0, 0.0],
            [0.0, cp, sp],
            [0.0, -sp, cp],
        ])
        return r_pitch @ r_yaw, self.position.to_array()


@dataclass
class RasterOverrides:
    """Raster-phase bug hooks: effective far plane, depth-tie rule and
    backface mask handling."""

    far: float = DEFAULT_FAR
    tie_rule: str = TIE_STABLE
    backface_tag: int = 0          # 0 = cull backfaces, no backface masking
    nominal_far: float = DEFAULT_FAR
    want_nominal_depth: bool = False


@dataclass
class FrameData:
    """Per-frame buffers plus fragment metadata for the mask rules."""

    frame: np.ndarray        # (h, w, 3) uint8
    depth: np.ndarray        # (h, w) float64, +inf for skybox
    objid: np.ndarray        # (h, w) int32, -1 for skybox
    sky_dir_y: np.ndarray    # (h, w) float64, world-space ray y component
    tagbuf: np.ndarray       # (h, w) int32, visible tagged-object fragments
    back_mask: Optional[np.ndarray] = None      # (h, w) bool
    nominal_depth: Optional[np.ndarray] = None  # (h, w) float64

    @property
    def sky(self) -> np.ndarray:
        return self.objid < 0


def project_vertex(camera: Camera, p: Vec3, width: int, height: int):
    """Project a world point to pixel coordinates and view depth."""
    r, eye = camera.basis()
    v = r @ (p.to_array() - eye)
    if v[2] >= -camera.near:
        return BEHIND
    depth = -v[2]
    x_ndc = v[0] / depth
    y_ndc = (v[1] / depth) * (width / height)
    px = (x_ndc + 1.0) / 2.0 * width
    py = (1.0 - (y_ndc + 1.0) / 2.0) * height
    return px, py, depth


def sample_texture(texture: Texture, u: float, v: float) -> tuple[int, int, int]:
    """Nearest-neighbor sample with wrap-around uv."""
    uu = u - math.floor(u)
    vv = v - math.floor(v)
    tx = min(int(uu * texture.width), texture.width - 1)
    ty = min(int(vv * texture.height), texture.height - 1)
    t = texture.texels[ty, tx]
    return (int(t[0]), int(t[1]), int(t[2]))


def sample_skybox(scene: Scene, direction: Vec3) -> tuple[int, int, int]:
    d = direction.normalized()
    hor = np.array(scene.skybox_horizon, dtype=np.float64)
    zen = np.array(scene.skybox_zenith, dtype=np.float64)
    if d.y >= 0.0:
        c = hor + (zen - hor) * d.y
    else:
        c = hor * (1.0 - 0.5 * (-d.y))
    return tuple(int(x) for x in np.floor(c + 0.5))


def _clip_triangle_near(vview: np.ndarray, uvs: np.ndarray, near: float):
    """Sutherland-Hodgman clip of one triangle against z <= -near.

    Returns (verts, uvs) of the clipped polygon (0, 3 or 4 vertices),
    winding preserved.
    """
    out_v = []
    out_uv = []
    n = 3
    for i in range(n):
        a = vview[i]
        b = vview[(i + 1) % n]
        ua = uvs[i]
        ub = uvs[(i + 1) % n]
        a_in = a[2] <= -near
        b_in = b[2] <= -near
        if a_in:
            out_v.append(a)
            out_uv.append(ua)
        if a_in != b_in:
            t = (-near - a[2]) / (b[2] - a[2])
            out_v.append(a + (b - a) * t)
            out_uv.append(ua + (ub - ua) * t)
    if len(out_v) < 3:
        return None
    return np.array(out_v), np.array(out_uv)


class Renderer:
    """Renders a scene into RGB8 + depth + fragment metadata buffers.

    Identical inputs produce byte-identical buffers; draw order is
    ascending object id.
    """

    def __init__(self, width: int = 128, height: int = 128,
                 near: float = DEFAULT_NEAR, far: float = DEFAULT_FAR):
        if width < 1 or height < 1:
            raise ValueError("resolution must be positive")
        self.width = width
        self.height = height
        self.near = near
        self.far = far
        xs = (2.0 * (np.arange(width) + 0.5) / width) - 1.0
        ys = 1.0 - 2.0 * (np.arange(height) + 0.5) / height
        xg, yg = np.meshgrid(xs, ys)
        # view ray at z = -1: y_view = y_ndc * height / width
        rays = np.stack([xg, yg * (height / width), -np.ones_like(xg)], axis=-1)
        self._rays_view = rays

    def camera(self, position: Vec3, orientation: Orientation) -> Camera:
        return Camera(position, orientation, self.near, self.far)

    # -- geometry setup -------------------------------------------------

    def _setup_object(self, obj: SceneObject, r: np.ndarray, eye: np.ndarray,
                      far: float):
        """Cull, view-transform, near-clip and project one object.

        Returns (px, py, pz, pu, pv, tris) or None if fully culled.
        """
        center, radius = obj.bounding_sphere()
        c = r @ (center - eye)
        dist = -c[2]
        if dist + radius < self.near:
            return None
        if dist - radius > far:
            return None
        # side-plane culls for 90 degree horizontal FOV (with slack)
        slack = radius * 1.5
        if abs(c[0]) - slack > dist + radius:
            return None
        if abs(c[1]) * (self.height / self.width) - slack > dist + radius:
            return None

        mesh = obj.mesh
        vview = (obj.world_vertices() - eye) @ r.T
        z = vview[:, 2]
        in_front = z <= -self.near
        if in_front.all():
            verts = vview
            uvs = mesh.uvs
            tris = mesh.triangles
        else:
            tri_in = in_front[mesh.triangles]
            keep = tri_in.all(axis=1)
            cross = tri_in.any(axis=1) & ~keep
            if not cross.any():
                if not keep.any():
                    return None
                verts = vview
                uvs = mesh.uvs
                tris = mesh.triangles[keep]
            else:
                extra_v = [vview]
                extra_uv = [mesh.uvs]
                tri_list = [mesh.triangles[keep]]
                base = len(vview)
                for ti in np.nonzero(cross)[0]:
                    idx = mesh.triangles[ti]
                    clipped = _clip_triangle_near(vview[idx], mesh.uvs[idx], self.near)
                    if clipped is None:
                        continue
                    cv, cuv = clipped
                    extra_v.append(cv)
                    extra_uv.append(cuv)
                    m = len(cv)
                    fan = [(base, base + k, base + k + 1) for k in range(1, m - 1)]
                    tri_list.append(np.array(fan, dtype=np.int32))
                    base += m
                verts = np.vstack(extra_v)
                uvs = np.vstack(extra_uv)
                tris = np.vstack(tri_list).astype(np.int32) if tri_list else None
                if tris is None or len(tris) == 0:
                    return None

        depth = -verts[:, 2]
        # vertices behind the near plane are never referenced by kept
        # triangles; guard the divide anyway
        safe = np.where(depth > 1e-12, depth, 1.0)
        px = (verts[:, 0] / safe + 1.0) / 2.0 * self.width
        py = (1.0 - ((verts[:, 1] / safe) * (self.width / self.height) + 1.0) / 2.0) * self.height
        return (np.ascontiguousarray(px), np.ascontiguousarray(py),
                np.ascontiguousarray(depth),
                np.ascontiguousarray(uvs[:, 0]), np.ascontiguousarray(uvs[:, 1]),
                np.ascontiguousarray(tris, dtype=np.int32))

    def _draw(self, obj: SceneObject, setup, mode: int, cull_back: bool,
              tie_parity: bool, frame_index: int, far: float,
              color, depth, objid, facing, tagbuf) -> None:
        px, py, pz, pu, pv, tris = setup
        mat = obj.material
        if mat.texture is not None:
            tex = mat.texture.texels
            has_tex = True
            flat = np.zeros(3, dtype=np.uint8)
        else:
            tex = _DUMMY_TEX
            has_tex = False
            flat = np.array(mat.color, dtype=np.uint8)
        _kernels.draw_triangles(
            px, py, pz, pu, pv, tris,
            tex, has_tex, flat,
            obj.id, obj.bug_tag, mode, cull_back,
            tie_parity, frame_index, far,
            color, depth, objid, facing, tagbuf)

    # -- full frame ------------------------------------------------------

    def _fill_sky(self, scene: Scene, camera: Camera):
        r, _ = camera.basis()
        world = self._rays_view @ r
        norm = np.linalg.norm(world, axis=-1)
        dir_y = world[..., 1] / norm
        hor = np.array(scene.skybox_horizon, dtype=np.float64)
        zen = np.array(scene.skybox_zenith, dtype=np.float64)
        t = np.clip(dir_y, 0.0, 1.0)[..., None]
        above = hor[None, None, :] + (zen - hor)[None, None, :] * t
        b = np.clip(-dir_y, 0.0, 1.0)[..., None]
        below = hor[None, None, :] * (1.0 - 0.5 * b)
        img = np.where(dir_y[..., None] >= 0.0, above, below)
        return np.floor(img + 0.5).astype(np.uint8), dir_y

    def render(self, scene: Scene, camera: Camera,
               overrides: Optional[RasterOverrides] = None,
               frame_index: int = 0) -> FrameData:
        ov = overrides or RasterOverrides(far=self.far, nominal_far=self.far)
        h, w = self.height, self.width
        frame, dir_y = self._fill_sky(scene, camera)
        depth = np.full((h, w), np.inf, dtype=np.float64)
        objid = np.full((h, w), -1, dtype=np.int32)
        tagbuf = np.zeros((h, w), dtype=np.int32)
        facing_dummy = np.zeros((h, w), dtype=np.uint8)
        tie_parity = ov.tie_rule == TIE_PARITY_FLIP

        r, eye = camera.basis()
        setups = []
        tagged = []
        for obj in scene.draw_order():
            setup = self._setup_object(obj, r, eye, ov.far)
            if setup is None:
                continue
            setups.append((obj, setup))
            if obj.bug_tag > 0:
                tagged.append((obj, setup))
            self._draw(obj, setup, _kernels.MODE_FRAME, True,
                       tie_parity, frame_index, ov.far,
                       frame, depth, objid, facing_dummy, tagbuf)

        # visible-silhouette pass for tagged objects (ties included, so a
        # coplanar z-fighting duplicate masks the whole overlap)
        for obj, setup in tagged:
            self._draw(obj, setup, _kernels.MODE_TAG_TEST, True,
                       tie_parity, frame_index, ov.far,
                       frame, depth, objid, facing_dummy, tagbuf)

        fd = FrameData(frame=frame, depth=depth, objid=objid,
                       sky_dir_y=dir_y, tagbuf=tagbuf)

        if ov.backface_tag > 0:
            depth2 = np.full((h, w), np.inf, dtype=np.float64)
            objid2 = np.full((h, w), -1, dtype=np.int32)
            facing = np.zeros((h, w), dtype=np.uint8)
            for obj, setup in setups:
                self._draw(obj, setup, _kernels.MODE_META, False,
                           tie_parity, frame_index, ov.far,
                           frame, depth2, objid2, facing, tagbuf)
            fd.back_mask = facing == _kernels.FACE_BACK

        if ov.want_nominal_depth:
            depth_n = np.full((h, w), np.inf, dtype=np.float64)
            for obj in scene.draw_order():
                setup = self._setup_object(obj, r, eye, ov.nominal_far)
                if setup is None:
                    continue
                self._draw(obj, setup, _kernels.MODE_DEPTH_ONLY, True,
                           tie_parity, frame_index, ov.nominal_far,
                           frame, depth_n, objid, facing_dummy, tagbuf)
            fd.nominal_depth = depth_n

        return fd


@dataclass
class MaskRules:
    """Which mask rules are live this frame (assembled from active bugs)."""

    backface_tag: int = 0
    boundary_tag: int = 0
    zclip_tag: int = 0


def build_mask(fd: FrameData, color_lut: np.ndarray,
               rules: Optional[MaskRules] = None) -> np.ndarray:
    """Compose the bug mask from fragment metadata, in fixed rule order:
    tagged objects, backfaces, skybox-below-horizon, differential far."""
    rules = rules or MaskRules()
    h, w = fd.depth.shape
    mask = np.zeros((h, w, 3), dtype=np.uint8)
    sel = fd.tagbuf > 0
    if sel.any():
        mask[sel] = color_lut[fd.tagbuf[sel]]
    if rules.backface_tag > 0 and fd.back_mask is not None:
        mask[fd.back_mask] = color_lut[rules.backface_tag]
    if rules.boundary_tag > 0:
        mask[fd.sky & (fd.sky_dir_y < 0.0)] = color_lut[rules.boundary_tag]
    if rules.zclip_tag > 0 and fd.nominal_depth is not None:
        mask[fd.sky & np.isfinite(fd.nominal_depth)] = color_lut[rules.zclip_tag]
    return mask
