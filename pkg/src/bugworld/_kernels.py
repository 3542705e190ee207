"""Numba fragment kernels for the software rasterizer.

Pixel coverage uses an edge-function test with the top-left fill rule so
that shared edges are covered exactly once. Interpolation is
perspective-correct. Depth test is strict less-than; exact ties are
resolved by the active tie rule (stable, or parity flip for z-fighting).
"""

import numpy as np
from numba import njit

# draw modes
MODE_FRAME = 0       # color + depth + object id
MODE_META = 1        # depth + object id + facing, no color
MODE_TAG_TEST = 2    # read-only depth: mark tagbuf where fragment is visible
MODE_DEPTH_ONLY = 3  # depth only (reference pass)

FACE_NONE = 0
FACE_FRONT = 1
FACE_BACK = 2


@njit(cache=True)
def _edge_owns(ax, ay, bx, by):
    # Top-left ownership for e == 0 fragments; direction-asymmetric so a
    # shared edge is owned by exactly one of its two triangles.
    dy = by - ay
    dx = bx - ax
    return dy > 0.0 or (dy == 0.0 and dx < 0.0)


@njit(cache=True)
def draw_triangles(px, py, pz, pu, pv, tris,
                   tex, has_tex, flat_rgb,
                   obj_id, tag, mode, cull_back,
                   tie_parity, frame_index, far,
                   color, depth, objid, facing, tagbuf):
    h = depth.shape[0]
    w = depth.shape[1]
    th = tex.shape[0]
    tw = tex.shape[1]
    for t in range(tris.shape[0]):
        i0 = tris[t, 0]
        i1 = tris[t, 1]
        i2 = tris[t, 2]
        x0 = px[i0]; y0 = py[i0]
        x1 = px[i1]; y1 = py[i1]
        x2 = px[i2]; y2 = py[i2]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area2 == 0.0:
            continue
        # CCW front faces project to negative signed area in pixel space
        # (pixel y points down).
        front = area2 < 0.0
        if cull_back and not front:
            continue
        if area2 < 0.0:
            i1, i2 = i2, i1
            x1, x2 = x2, x1
            y1, y2 = y2, y1
            area2 = -area2

        z0 = pz[i0]; z1 = pz[i1]; z2 = pz[i2]
        iw0 = 1.0 / z0; iw1 = 1.0 / z1; iw2 = 1.0 / z2
        u0 = pu[i0] * iw0; u1 = pu[i1] * iw1; u2 = pu[i2] * iw2
        v0 = pv[i0] * iw0; v1 = pv[i1] * iw1; v2 = pv[i2] * iw2

        minx = min(x0, min(x1, x2))
        maxx = max(x0, max(x1, x2))
        miny = min(y0, min(y1, y2))
        maxy = max(y0, max(y1, y2))
        ix0 = int(np.ceil(minx - 0.5))
        ix1 = int(np.floor(maxx - 0.5))
        iy0 = int(np.ceil(miny - 0.5))
        iy1 = int(np.floor(maxy - 0.5))
        if ix0 < 0:
            ix0 = 0
        if iy0 < 0:
            iy0 = 0
        if ix1 > w - 1:
            ix1 = w - 1
        if iy1 > h - 1:
            iy1 = h - 1

        own0 = _edge_owns(x1, y1, x2, y2)
        own1 = _edge_owns(x2, y2, x0, y0)
        own2 = _edge_owns(x0, y0, x1, y1)

        for iy in range(iy0, iy1 + 1):
            cy = iy + 0.5
            for ix in range(ix0, ix1 + 1):
                cx = ix + 0.5
                e0 = (x2 - x1) * (cy - y1) - (y2 - y1) * (cx - x1)
                e1 = (x0 - x2) * (cy - y2) - (y0 - y2) * (cx - x2)
                e2 = (x1 - x0) * (cy - y0) - (y1 - y0) * (cx - x0)
                if e0 < 0.0 or e1 < 0.0 or e2 < 0.0:
                    continue
                if e0 == 0.0 and not own0:
                    continue
                if e1 == 0.0 and not own1:
                    continue
                if e2 == 0.0 and not own2:
                    continue
                l0 = e0 / area2
                l1 = e1 / area2
                l2 = e2 / area2
                invz = l0 * iw0 + l1 * iw1 + l2 * iw2
                z = 1.0 / invz
                if z > far:
                    continue

                if mode == MODE_TAG_TEST:
                    if z <= depth[iy, ix]:
                        tagbuf[iy, ix] = tag
                    continue

                d = depth[iy, ix]
                win = z < d
                if (not win) and z == d and tie_parity:
                    win = ((ix + iy + frame_index) & 1) == 1
                if not win:
                    continue
                depth[iy, ix] = z
                if mode == MODE_DEPTH_ONLY:
                    continue
                objid[iy, ix] = obj_id
                if mode == MODE_META:
                    facing[iy, ix] = FACE_FRONT if front else FACE_BACK
                    continue
                # MODE_FRAME: shade
                if has_tex:
                    u = (l0 * u0 + l1 * u1 + l2 * u2) / invz
                    v = (l0 * v0 + l1 * v1 + l2 * v2) / invz
                    u -= np.floor(u)
                    v -= np.floor(v)
                    txi = int(u * tw)
                    tyi = int(v * th)
                    if txi > tw - 1:
                        txi = tw - 1
                    if tyi > th - 1:
                        tyi = th - 1
                    color[iy, ix, 0] = tex[tyi, txi, 0]
                    color[iy, ix, 1] = tex[tyi, txi, 1]
                    color[iy, ix, 2] = tex[tyi, txi, 2]
                else:
                    color[iy, ix, 0] = flat_rgb[0]
                    color[iy, ix, 1] = flat_rgb[1]
                    color[iy, ix, 2] = flat_rgb[2]
