"""Vectors, rigid transforms and axis-aligned bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, o: "Vec3") -> "Vec3":
        return Vec3(self.x + o.x, self.y + o.y, self.z + o.z)

    def __sub__(self, o: "Vec3") -> "Vec3":
        return Vec3(self.x - o.x, self.y - o.y, self.z - o.z)

    def __mul__(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def dot(self, o: "Vec3") -> float:
        return self.x * o.x + self.y * o.y + self.z * o.z

    def cross(self, o: "Vec3") -> "Vec3":
        return Vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )

    def length(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.length()
        if n == 0.0:
            raise ValueError("cannot normalize zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))


@dataclass
class Orientation:
    """Yaw in [0, 360) degrees, pitch clamped to [-89, +89] degrees."""

    yaw: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        self.normalize()

    def normalize(self) -> None:
        self.yaw = self.yaw % 360.0
        self.pitch = max(-89.0, min(89.0, self.pitch))

    def turn(self, delta_yaw: float) -> None:
        self.yaw = (self.yaw + delta_yaw) % 360.0

    def look(self, delta_pitch: float) -> None:
        self.pitch = max(-89.0, min(89.0, self.pitch + delta_pitch))

    def forward(self) -> Vec3:
        """Horizontal heading direction (ignores pitch)."""
        r = math.radians(self.yaw)
        return Vec3(math.sin(r), 0.0, math.cos(r))


@dataclass
class Transform:
    """Uniform scale, then yaw rotation about +Y, then translation."""

    translation: Vec3 = field(default_factory=Vec3)
    yaw: float = 0.0
    scale: float = 1.0

    def apply(self, p: Vec3) -> Vec3:
        c = math.cos(math.radians(self.yaw))
        s = math.sin(math.radians(self.yaw))
        x = p.x * self.scale
        y = p.y * self.scale
        z = p.z * self.scale
        # Ry(yaw): x' = c*x + s*z ; z' = -s*x + c*z
        rx = c * x + s * z
        rz = -s * x + c * z
        return Vec3(rx + self.translation.x, y + self.translation.y, rz + self.translation.z)

    def apply_array(self, pts: np.ndarray) -> np.ndarray:
        c = math.cos(math.radians(self.yaw))
        s = math.sin(math.radians(self.yaw))
        p = pts * self.scale
        out = np.empty_like(p)
        out[:, 0] = c * p[:, 0] + s * p[:, 2] + self.translation.x
        out[:, 1] = p[:, 1] + self.translation.y
        out[:, 2] = -s * p[:, 0] + c * p[:, 2] + self.translation.z
        return out

    def apply_inverse(self, p: Vec3) -> Vec3:
        c = math.cos(math.radians(-self.yaw))
        s = math.sin(math.radians(-self.yaw))
        x = p.x - self.translation.x
        y = p.y - self.translation.y
        z = p.z - self.translation.z
        rx = c * x + s * z
        rz = -s * x + c * z
        return Vec3(rx / self.scale, y / self.scale, rz / self.scale)


def transform_point(transform: Transform, p: Vec3) -> Vec3:
    return transform.apply(p)


@dataclass
class TriMesh:
    """Indexed triangle mesh with CCW front-face winding.

    vertices: (n, 3) float64, uvs: (n, 2) float64 in [0,1]^2,
    triangles: (m, 3) int32 vertex indices.
    """

    vertices: np.ndarray
    uvs: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.uvs = np.asarray(self.uvs, dtype=np.float64).reshape(-1, 2)
        self.triangles = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        n = len(self.vertices)
        if len(self.uvs) != n:
            raise ValueError("uvs length must equal vertices length")
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= n):
            raise ValueError("triangle index out of range")

    def copy(self) -> "TriMesh":
        return TriMesh(self.vertices.copy(), self.uvs.copy(), self.triangles.copy())


@dataclass
class AABB:
    min: Vec3
    max: Vec3

    def contains(self, p: Vec3, eps: float = 1e-9) -> bool:
        return (
            self.min.x - eps <= p.x <= self.max.x + eps
            and self.min.y - eps <= p.y <= self.max.y + eps
            and self.min.z - eps <= p.z <= self.max.z + eps
        )


def mesh_aabb(mesh: TriMesh, transform: Transform) -> AABB:
    if len(mesh.vertices) == 0:
        raise ValueError("mesh_aabb of empty mesh")
    w = transform.apply_array(mesh.vertices)
    lo = w.min(axis=0)
    hi = w.max(axis=0)
    return AABB(Vec3.from_array(lo), Vec3.from_array(hi))
