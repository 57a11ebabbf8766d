"""Fused per-eye raycast kernel (numba).

One pass over pixels: rotate the cached camera-frame ray, intersect every
object, shade the winner. Geometry runs in float64 so ground-truth depth
matches analytic intersections to solver precision; shading is float32.
The numpy implementation in simworld remains the reference; a test holds
the two within a gray level of each other.
"""

import math

import numpy as np
from numba import njit

KIND_SPHERE = 0
KIND_QUAD = 1
TEX_SOLID = 0
TEX_CHECKER = 1
TEX_NOISE = 2


@njit(cache=True, nogil=True)
def render_eye(
    rays,      # (n, 3) float64 unit rays, camera frame
    R,         # (3, 3) float64 camera-to-world
    origin,    # (3,) float64 camera center, world
    kinds,     # (m,) int32 shape kind
    anchors,   # (m, 3) float64 current sphere center / quad origin
    eus, evs,  # (m, 3) float64 quad edges (zeros for spheres)
    nrms,      # (m, 3) float64 unit quad normals
    radii,     # (m,) float64
    tex_kinds, # (m,) int32
    cells,     # (m,) float64 checker cell size
    colors, colors2,  # (m, 3) float32
    tile_idx,  # (m,) int32 index into tiles
    px_per_m,  # (m,) float64 noise tile pixels per meter
    tiles,     # (k, 256, 256) float32
    light,     # (3,) float64 unit light direction
    ambient,   # float
    bg,        # uint8 background gray
):
    n = rays.shape[0]
    m = kinds.shape[0]
    rgb = np.empty((n, 3), np.uint8)
    depth = np.full(n, np.nan, np.float64)
    objidx = np.full(n, -1, np.int32)
    own = np.zeros(m, np.int64)

    # per-object constants for this eye
    oan = np.empty(m)
    oaeu = np.empty(m)
    oaev = np.empty(m)
    inv_eeu = np.empty(m)
    inv_eev = np.empty(m)
    len_u = np.empty(m)
    len_v = np.empty(m)
    ocs = np.empty((m, 3))
    cc = np.empty(m)
    for k in range(m):
        oax = anchors[k, 0] - origin[0]
        oay = anchors[k, 1] - origin[1]
        oaz = anchors[k, 2] - origin[2]
        if kinds[k] == KIND_QUAD:
            oan[k] = oax * nrms[k, 0] + oay * nrms[k, 1] + oaz * nrms[k, 2]
            oaeu[k] = oax * eus[k, 0] + oay * eus[k, 1] + oaz * eus[k, 2]
            oaev[k] = oax * evs[k, 0] + oay * evs[k, 1] + oaz * evs[k, 2]
            eeu = eus[k, 0] ** 2 + eus[k, 1] ** 2 + eus[k, 2] ** 2
            eev = evs[k, 0] ** 2 + evs[k, 1] ** 2 + evs[k, 2] ** 2
            inv_eeu[k] = 1.0 / eeu
            inv_eev[k] = 1.0 / eev
            len_u[k] = math.sqrt(eeu)
            len_v[k] = math.sqrt(eev)
        else:
            ocs[k, 0] = -oax
            ocs[k, 1] = -oay
            ocs[k, 2] = -oaz
            cc[k] = oax * oax + oay * oay + oaz * oaz - radii[k] * radii[k]

    for i in range(n):
        dx = R[0, 0] * rays[i, 0] + R[0, 1] * rays[i, 1] + R[0, 2] * rays[i, 2]
        dy = R[1, 0] * rays[i, 0] + R[1, 1] * rays[i, 1] + R[1, 2] * rays[i, 2]
        dz = R[2, 0] * rays[i, 0] + R[2, 1] * rays[i, 1] + R[2, 2] * rays[i, 2]

        best_t = np.inf
        best_k = -1
        # winner's surface data, captured during the scan
        w_nx = 0.0
        w_ny = 0.0
        w_nz = 0.0
        w_a = 0.0
        w_b = 0.0

        for k in range(m):
            if kinds[k] == KIND_SPHERE:
                b = dx * ocs[k, 0] + dy * ocs[k, 1] + dz * ocs[k, 2]
                disc = b * b - cc[k]
                if disc < 0.0:
                    continue
                root = math.sqrt(disc)
                tt = -b - root
                if tt <= 1e-6:
                    tt = -b + root
                    if tt <= 1e-6:
                        continue
                own[k] += 1
                if tt < best_t:
                    best_t = tt
                    best_k = k
                    inv_r = 1.0 / radii[k]
                    w_nx = (origin[0] + tt * dx - anchors[k, 0]) * inv_r
                    w_ny = (origin[1] + tt * dy - anchors[k, 1]) * inv_r
                    w_nz = (origin[2] + tt * dz - anchors[k, 2]) * inv_r
            else:
                den = dx * nrms[k, 0] + dy * nrms[k, 1] + dz * nrms[k, 2]
                if den > -1e-9 and den < 1e-9:
                    continue
                tt = oan[k] / den
                if tt <= 1e-6:
                    continue
                a = (
                    tt * (dx * eus[k, 0] + dy * eus[k, 1] + dz * eus[k, 2])
                    - oaeu[k]
                ) * inv_eeu[k]
                if a < 0.0 or a > 1.0:
                    continue
                b = (
                    tt * (dx * evs[k, 0] + dy * evs[k, 1] + dz * evs[k, 2])
                    - oaev[k]
                ) * inv_eev[k]
                if b < 0.0 or b > 1.0:
                    continue
                own[k] += 1
                if tt < best_t:
                    best_t = tt
                    best_k = k
                    w_nx = nrms[k, 0]
                    w_ny = nrms[k, 1]
                    w_nz = nrms[k, 2]
                    w_a = a * len_u[k]
                    w_b = b * len_v[k]

        if best_k < 0:
            rgb[i, 0] = bg
            rgb[i, 1] = bg
            rgb[i, 2] = bg
            continue

        k = best_k
        objidx[i] = k
        depth[i] = best_t * rays[i, 2]

        cr = colors[k, 0]
        cg = colors[k, 1]
        cb = colors[k, 2]
        tk = tex_kinds[k]
        if tk == TEX_CHECKER:
            if kinds[k] == KIND_QUAD:
                par = (
                    int(math.floor(w_a / cells[k]))
                    + int(math.floor(w_b / cells[k]))
                ) & 1
            else:
                px = origin[0] + best_t * dx
                py = origin[1] + best_t * dy
                pz = origin[2] + best_t * dz
                par = (
                    int(math.floor(px / cells[k]))
                    + int(math.floor(py / cells[k]))
                    + int(math.floor(pz / cells[k]))
                ) & 1
            if par:
                cr = colors2[k, 0]
                cg = colors2[k, 1]
                cb = colors2[k, 2]
        elif tk == TEX_NOISE:
            if kinds[k] == KIND_QUAD:
                a_m = w_a
                b_m = w_b
            else:
                a_m = math.atan2(w_nx, w_nz) * radii[k]
                s = w_ny
                if s > 1.0:
                    s = 1.0
                elif s < -1.0:
                    s = -1.0
                b_m = math.asin(s) * radii[k]
            u = (a_m * px_per_m[k]) % 256.0
            v = (b_m * px_per_m[k]) % 256.0
            u0 = int(u)
            v0 = int(v)
            fu = np.float32(u - u0)
            fv = np.float32(v - v0)
            u1 = (u0 + 1) & 255
            v1 = (v0 + 1) & 255
            ti = tile_idx[k]
            top = tiles[ti, v0, u0] * (1.0 - fu) + tiles[ti, v0, u1] * fu
            bot = tiles[ti, v1, u0] * (1.0 - fu) + tiles[ti, v1, u1] * fu
            nval = top * (1.0 - fv) + bot * fv
            f = np.float32(0.35) + np.float32(0.65) * nval
            cr *= f
            cg *= f
            cb *= f

        lam = w_nx * light[0] + w_ny * light[1] + w_nz * light[2]
        if lam < 0.0:
            lam = -lam
        inten = np.float32(ambient + (1.0 - ambient) * lam)
        fr = np.rint(cr * inten)
        fg = np.rint(cg * inten)
        fb = np.rint(cb * inten)
        rgb[i, 0] = np.uint8(255.0 if fr > 255.0 else (0.0 if fr < 0.0 else fr))
        rgb[i, 1] = np.uint8(255.0 if fg > 255.0 else (0.0 if fg < 0.0 else fg))
        rgb[i, 2] = np.uint8(255.0 if fb > 255.0 else (0.0 if fb < 0.0 else fb))

    return rgb, depth, objidx, own
