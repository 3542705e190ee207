"""Mesh primitives and procedural textures.

Primitives are registered by name so scenes can be serialized as
(primitive, params) pairs instead of raw vertex data.
"""

from __future__ import annotations

import numpy as np

from .geometry import TriMesh


def quad(width: float = 1.0, height: float = 1.0) -> TriMesh:
    """Vertical quad in the XY plane, centered at origin, normal +Z."""
    w, h = width / 2.0, height / 2.0
    verts = [(-w, -h, 0.0), (w, -h, 0.0), (w, h, 0.0), (-w, h, 0.0)]
    uvs = [(0, 0), (1, 0), (1, 1), (0, 1)]
    tris = [(0, 1, 2), (0, 2, 3)]
    return TriMesh(np.array(verts), np.array(uvs, dtype=float), np.array(tris))


def floor_quad(size: float = 2.0) -> TriMesh:
    """Horizontal quad in the XZ plane, centered at origin, normal +Y."""
    s = size / 2.0
    verts = [(-s, 0.0, -s), (s, 0.0, -s), (s, 0.0, s), (-s, 0.0, s)]
    uvs = [(0, 0), (1, 0), (1, 1), (0, 1)]
    tris = [(0, 2, 1), (0, 3, 2)]
    return TriMesh(np.array(verts), np.array(uvs, dtype=float), np.array(tris))


def box(sx: float = 1.0, sy: float = 1.0, sz: float = 1.0) -> TriMesh:
    """Axis-aligned box centered at origin, outward CCW faces."""
    hx, hy, hz = sx / 2.0, sy / 2.0, sz / 2.0
    verts = []
    uvs = []
    tris = []

    def face(a, b, c, d):
        base = len(verts)
        verts.extend([a, b, c, d])
        uvs.extend([(0, 0), (1, 0), (1, 1), (0, 1)])
        tris.extend([(base, base + 1, base + 2), (base, base + 2, base + 3)])

    # +Z face (CCW viewed from +Z)
    face((-hx, -hy, hz), (hx, -hy, hz), (hx, hy, hz), (-hx, hy, hz))
    # -Z face
    face((hx, -hy, -hz), (-hx, -hy, -hz), (-hx, hy, -hz), (hx, hy, -hz))
    # +X face
    face((hx, -hy, hz), (hx, -hy, -hz), (hx, hy, -hz), (hx, hy, hz))
    # -X face
    face((-hx, -hy, -hz), (-hx, -hy, hz), (-hx, hy, hz), (-hx, hy, -hz))
    # +Y face (viewed from above)
    face((-hx, hy, hz), (hx, hy, hz), (hx, hy, -hz), (-hx, hy, -hz))
    # -Y face
    face((-hx, -hy, -hz), (hx, -hy, -hz), (hx, -hy, hz), (-hx, -hy, hz))
    return TriMesh(np.array(verts, dtype=float), np.array(uvs, dtype=float), np.array(tris))


PRIMITIVES = {
    "quad": quad,
    "floor_quad": floor_quad,
    "box": box,
}


def build_primitive(name: str, params: dict) -> TriMesh:
    if name not in PRIMITIVES:
        raise ValueError(f"unknown mesh primitive: {name}")
    return PRIMITIVES[name](**params)


def make_checker(size: int = 64, tile: int = 8,
                 c0=(210, 210, 210), c1=(70, 70, 105)) -> np.ndarray:
    """Checkerboard RGB8 texture, (size, size, 3) uint8."""
    yy, xx = np.mgrid[0:size, 0:size]
    odd = ((xx // tile) + (yy // tile)) % 2
    tex = np.where(odd[..., None] == 0, np.uint8(0), np.uint8(1))
    out = np.empty((size, size, 3), dtype=np.uint8)
    for ch in range(3):
        out[..., ch] = np.where(odd == 0, c0[ch], c1[ch])
    return out


TEXTURES = {
    "checker": make_checker,
}


def build_texture(name: str) -> np.ndarray:
    if name not in TEXTURES:
        raise ValueError(f"unknown texture: {name}")
    return TEXTURES[name]()
