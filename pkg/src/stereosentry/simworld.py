"""Deterministic synthetic stereo world.

A small raycaster over textured quads and spheres stands in for the real
environment: it produces genuinely distorted stereo pairs (rays are
generated through the lens model), exact per-pixel depth for the left
camera, and exact object bounding boxes to ground-truth the detector and
tracker.

The gimbal-to-world rotation order is yaw about the world vertical, then
pitch about the post-yaw horizontal axis, then roll about the viewing
axis. World y points down; positive yaw swings the view toward +x
(rightward), positive pitch tilts it up.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from . import _render
from .camera_model import ImageBuffer, Pose, StereoRig, pixel_ray
from .detect import Detection
from .rotations import axis_angle_to_matrix, gimbal_to_camera
from .stereo import DepthMap

BACKGROUND_GRAY = 26  # 10% gray
DEFAULT_LIGHT = (-0.4, -1.0, -0.35)
AMBIENT = 0.3
MIN_VISIBLE_FRACTION = 0.5  # occlusion cutoff for ground-truth detections


@dataclass(frozen=True)
class SceneObject:
    """One shape. Spheres use center/radius; quads use center as their
    origin corner plus two edge vectors. The trajectory, when present,
    moves the anchor; `phase` is its scalar state (orbit degrees or
    polyline arc length in meters)."""

    object_id: str
    kind: str  # "sphere" | "quad"
    label: str
    center: tuple
    radius: float = 0.0
    edge_u: tuple = (1.0, 0.0, 0.0)
    edge_v: tuple = (0.0, 1.0, 0.0)
    texture: dict = None
    trajectory: dict = None
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sphere", "quad"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if self.kind == "sphere" and self.radius <= 0:
            raise ValueError("sphere radius must be positive")
        if self.kind == "quad":
            n = np.cross(self.edge_u, self.edge_v)
            if np.linalg.norm(n) < 1e-12:
                raise ValueError("quad edges must be linearly independent")
        if self.texture is None:
            object.__setattr__(self, "texture", {"type": "noise", "seed": 1, "scale": 0.08})

    def anchor(self):
        """Current world anchor (sphere center / quad origin) from the
        trajectory state."""
        traj = self.trajectory
        if not traj:
            return np.asarray(self.center, dtype=float)
        if traj["type"] == "orbit":
            axis = np.asarray(traj.get("axis", (0.0, 1.0, 0.0)), dtype=float)
            axis = axis / np.linalg.norm(axis)
            angle = np.radians(traj.get("phase_deg", 0.0) + self.phase)
            # deterministic reference direction perpendicular to the axis
            ref = np.cross(axis, (0.0, 0.0, 1.0))
            if np.linalg.norm(ref) < 1e-9:
                ref = np.cross(axis, (1.0, 0.0, 0.0))
            ref = ref / np.linalg.norm(ref)
            R = axis_angle_to_matrix(axis * angle)
            return np.asarray(traj["center"], dtype=float) + traj["radius"] * (R @ ref)
        if traj["type"] == "waypoints":
            pts = np.asarray(traj["points"], dtype=float)
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
            s = min(self.phase, float(seg.sum()))  # clamp at the last point
            for i, length in enumerate(seg):
                if s <= length or i == len(seg) - 1:
                    f = 0.0 if length == 0 else min(s / length, 1.0)
                    return pts[i] + f * (pts[i + 1] - pts[i])
                s -= length
            return pts[-1]
        raise ValueError(f"unknown trajectory type {traj['type']!r}")


@dataclass(frozen=True)
class Scene:
    objects: tuple
    light: tuple = DEFAULT_LIGHT


@dataclass(frozen=True)
class StereoFrame:
    left: ImageBuffer
    right: ImageBuffer
    gt_depth_left: DepthMap
    gt_detections: list
    sim_time: float
    gimbal_angles: tuple


def step_scene(scene: Scene, dt: float) -> Scene:
    """Advance every trajectory by dt seconds; returns a new scene."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    objs = []
    for o in scene.objects:
        traj = o.trajectory
        if not traj:
            objs.append(o)
        elif traj["type"] == "orbit":
            objs.append(replace(o, phase=o.phase + traj["rate_deg_s"] * dt))
        else:
            objs.append(replace(o, phase=o.phase + traj.get("speed", 1.0) * dt))
    return replace(scene, objects=tuple(objs))


def load_scene(path) -> Scene:
    with open(path) as f:
        raw = json.load(f)
    objs = []
    for i, o in enumerate(raw["objects"]):
        objs.append(
            SceneObject(
                object_id=str(o.get("id", f"object-{i}")),
                kind=o["kind"],
                label=o["label"],
                center=tuple(o["center"]),
                radius=float(o.get("radius", 0.0)),
                edge_u=tuple(o.get("edge_u", (1.0, 0.0, 0.0))),
                edge_v=tuple(o.get("edge_v", (0.0, 1.0, 0.0))),
                texture=o.get("texture"),
                trajectory=o.get("trajectory"),
            )
        )
    return Scene(objects=tuple(objs), light=tuple(raw.get("light", DEFAULT_LIGHT)))


def default_scene() -> Scene:
    """Room used when no scene file is given: a textured back wall for
    depth, a checker floor, a static chair, and a person circling slowly
    at about 2 m so the tracker has something to chase."""
    return Scene(objects=(
        SceneObject(object_id="wall", kind="quad", label="tvmonitor",
                    center=(-4.0, -2.5, 6.0),
                    edge_u=(8.0, 0.0, 0.0), edge_v=(0.0, 5.0, 0.0),
                    texture={"type": "noise", "seed": 9, "scale": 0.25}),
        SceneObject(object_id="floor", kind="quad", label="diningtable",
                    center=(-4.0, 0.9, 0.2),
                    edge_u=(8.0, 0.0, 0.0), edge_v=(0.0, 0.0, 6.0),
                    texture={"type": "checker", "cell": 0.5,
                             "color": [120, 110, 100], "color2": [70, 65, 60]}),
        SceneObject(object_id="chair", kind="quad", label="chair",
                    center=(-1.6, -0.2, 3.0),
                    edge_u=(0.6, 0.0, 0.1), edge_v=(0.0, 0.8, 0.0),
                    texture={"type": "solid", "color": [90, 140, 220]}),
        SceneObject(object_id="person", kind="sphere", label="person",
                    center=(0.0, 0.0, 2.0), radius=0.18,
                    texture={"type": "noise", "seed": 3, "scale": 0.05},
                    trajectory={"type": "orbit", "center": [0.0, 0.0, 2.2],
                                "axis": [0.0, 1.0, 0.0], "radius": 0.5,
                                "rate_deg_s": 10.0, "phase_deg": 180.0}),
    ))


def save_scene(scene: Scene, path):
    objs = []
    for o in scene.objects:
        entry = {"id": o.object_id, "kind": o.kind, "label": o.label,
                 "center": list(o.center), "texture": o.texture}
        if o.kind == "sphere":
            entry["radius"] = o.radius
        else:
            entry["edge_u"] = list(o.edge_u)
            entry["edge_v"] = list(o.edge_v)
        if o.trajectory:
            entry["trajectory"] = o.trajectory
        objs.append(entry)
    with open(path, "w") as f:
        json.dump({"light": list(scene.light), "objects": objs}, f, indent=2)
        f.write("\n")


_RAY_CACHE = {}


def _ray_grid(intr):
    """Unit rays through every pixel center, distortion included. Cached
    per intrinsics; (h*w, 3) float64."""
    key = (intr.fx, intr.fy, intr.cx, intr.cy,
           intr.k1, intr.k2, intr.p1, intr.p2, intr.width, intr.height)
    grid = _RAY_CACHE.get(key)
    if grid is None:
        u, v = np.meshgrid(
            np.arange(intr.width, dtype=float),
            np.arange(intr.height, dtype=float),
        )
        grid = np.ascontiguousarray(pixel_ray(u.ravel(), v.ravel(), intr))
        _RAY_CACHE[key] = grid
    return grid


def _hash01(ix, iy, iz, seed):
    """Integer lattice hash to [0, 1); wraps intentionally in uint32."""
    seed_term = np.uint32((seed * 3266489917) & 0xFFFFFFFF)
    h = (
        ix.astype(np.uint32) * np.uint32(374761393)
        + iy.astype(np.uint32) * np.uint32(668265263)
        + iz.astype(np.uint32) * np.uint32(2246822519)
        + seed_term
    )
    h ^= h >> np.uint32(13)
    h *= np.uint32(1274126177)
    h ^= h >> np.uint32(16)
    return (h & np.uint32(0x00FFFFFF)).astype(np.float32) / np.float32(0x00FFFFFF)


_TILE_CACHE = {}
_TILE_N = 256  # tile pixels
_TILE_CELLS = 32  # noise lattice cells per tile (periodic)


def _noise_tile(seed):
    """Periodic 2-d value-noise tile in [0, 1); built once per seed."""
    tile = _TILE_CACHE.get(seed)
    if tile is not None:
        return tile
    g = np.arange(_TILE_N, dtype=np.float32) * (_TILE_CELLS / _TILE_N)
    gx, gy = np.meshgrid(g, g)
    x0 = np.floor(gx)
    y0 = np.floor(gy)
    fx = gx - x0
    fy = gy - y0
    fx = fx * fx * (3.0 - 2.0 * fx)  # smoothstep
    fy = fy * fy * (3.0 - 2.0 * fy)
    ix = x0.astype(np.int64)
    iy = y0.astype(np.int64)
    zeros = np.zeros_like(ix)
    tile = np.zeros((_TILE_N, _TILE_N), dtype=np.float32)
    for dx in (0, 1):
        wx = fx if dx else 1.0 - fx
        for dy in (0, 1):
            wy = fy if dy else 1.0 - fy
            corner = _hash01(
                (ix + dx) % _TILE_CELLS, (iy + dy) % _TILE_CELLS, zeros, seed
            )
            tile += corner * wx * wy
    _TILE_CACHE[seed] = tile
    return tile


def _sample_noise(a, b, seed, scale):
    """Bilinear, wrapping lookup of the seed's tile at surface coordinates
    (a, b) in meters; one lattice cell spans `scale` meters."""
    tile = _noise_tile(seed)
    px_per_m = np.float32(_TILE_N / (_TILE_CELLS * scale))
    u = (a * px_per_m) % _TILE_N
    v = (b * px_per_m) % _TILE_N
    u0 = u.astype(np.int64)
    v0 = v.astype(np.int64)
    fu = (u - u0).astype(np.float32)
    fv = (v - v0).astype(np.float32)
    u1 = (u0 + 1) % _TILE_N
    v1 = (v0 + 1) % _TILE_N
    top = tile[v0, u0] * (1.0 - fu) + tile[v0, u1] * fu
    bot = tile[v1, u0] * (1.0 - fu) + tile[v1, u1] * fu
    return top * (1.0 - fv) + bot * fv


def _shade(obj, hit_pts, normals, uv_ab, light):
    """Per-hit RGB for one object; hit_pts (n, 3), uv_ab local quad coords
    or None for spheres."""
    tex = obj.texture
    kind = tex.get("type", "noise")
    base = np.asarray(tex.get("color", (200, 200, 200)), dtype=np.float32)
    if kind == "solid":
        rgb = np.broadcast_to(base, hit_pts.shape).copy()
    elif kind == "checker":
        cell = float(tex.get("cell", 0.1))
        other = np.asarray(tex.get("color2", (40, 40, 40)), dtype=np.float32)
        if uv_ab is not None:
            parity = (
                np.floor(uv_ab[:, 0] / cell).astype(np.int64)
                + np.floor(uv_ab[:, 1] / cell).astype(np.int64)
            ) & 1
        else:  # spheres: world-space 3-d checker
            parity = np.sum(np.floor(hit_pts / cell).astype(np.int64), axis=1) & 1
        rgb = np.where(parity[:, None] == 0, base, other)
    elif kind == "noise":
        if uv_ab is not None:
            a, b = uv_ab[:, 0], uv_ab[:, 1]
        else:  # spheres: equirectangular surface coordinates
            a = np.arctan2(normals[:, 0], normals[:, 2]) * np.float32(obj.radius)
            b = np.arcsin(np.clip(normals[:, 1], -1.0, 1.0)) * np.float32(obj.radius)
        n = _sample_noise(a, b, int(tex.get("seed", 1)), float(tex.get("scale", 0.08)))
        rgb = base * (0.35 + 0.65 * n[:, None])
    else:
        raise ValueError(f"unknown texture type {kind!r}")

    ldir = np.asarray(light, dtype=np.float32)
    ldir = ldir / np.linalg.norm(ldir)
    lam = np.abs(normals @ ldir)  # two-sided
    return rgb * (AMBIENT + (1.0 - AMBIENT) * lam)[:, None]


def _intersect_object(obj, origin, dirs):
    """Ray-object intersection. Returns (t, normals, uv_ab); t = inf where
    missed. dirs (n, 3) unit, origin (3,)."""
    n_rays = len(dirs)
    t = np.full(n_rays, np.inf)
    anchor = obj.anchor()
    if obj.kind == "sphere":
        oc = origin - anchor
        b = dirs @ oc
        c = float(oc @ oc - obj.radius * obj.radius)
        disc = b * b - c
        hit = disc >= 0
        root = np.sqrt(np.where(hit, disc, 0.0))
        t0 = -b - root
        t1 = -b + root
        tt = np.where(t0 > 1e-6, t0, t1)  # inside the sphere: far face
        ok = hit & (tt > 1e-6)
        t[ok] = tt[ok]
        pts = origin + dirs[ok] * tt[ok, None]
        normals = (pts - anchor) / obj.radius
        return t, normals, None
    # quad: solve in plane coordinates without materializing hit points
    eu = np.asarray(obj.edge_u, dtype=float)
    ev = np.asarray(obj.edge_v, dtype=float)
    n = np.cross(eu, ev)
    n = n / np.linalg.norm(n)
    oa = anchor - origin
    denom = dirs @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = (oa @ n) / denom
    # hit = origin + tt*dirs; local a = ((hit - anchor) . eu) / |eu|^2
    a = (tt * (dirs @ eu) - oa @ eu) / (eu @ eu)
    b = (tt * (dirs @ ev) - oa @ ev) / (ev @ ev)
    inside = (
        (np.abs(denom) > 1e-9) & (tt > 1e-6)
        & (a >= 0) & (a <= 1) & (b >= 0) & (b <= 1)
    )
    t[inside] = tt[inside]
    uv_ab = np.column_stack(
        [a[inside] * np.linalg.norm(eu), b[inside] * np.linalg.norm(ev)]
    )
    normals = np.broadcast_to(n, (int(inside.sum()), 3))
    return t, normals, uv_ab


def _render_eye_reference(scene, intr, R_wc, origin):
    """Vectorized numpy renderer; the jitted kernel's reference twin.

    Returns (rgb uint8 (h, w, 3), depth float64 (h, w), object index
    (h, w; -1 = background), per-object own-hit counts)."""
    h, w = intr.height, intr.width
    rays_cam = _ray_grid(intr)
    dirs = rays_cam @ R_wc.T
    n_rays = len(dirs)

    best_t = np.full(n_rays, np.inf)
    best_obj = np.full(n_rays, -1, dtype=np.int32)
    own_hits = np.zeros(len(scene.objects), dtype=np.int64)
    per_obj = []
    for k, obj in enumerate(scene.objects):
        t, normals, uv_ab = _intersect_object(obj, origin, dirs)
        hit = np.isfinite(t)
        own_hits[k] = int(hit.sum())
        closer = t < best_t
        best_t[closer] = t[closer]
        best_obj[closer] = k
        per_obj.append((t, normals, uv_ab))

    img = np.full((n_rays, 3), BACKGROUND_GRAY, dtype=np.float32)
    for k, obj in enumerate(scene.objects):
        mask = best_obj == k
        if not mask.any():
            continue
        t, normals, uv_ab = per_obj[k]
        hit_idx = np.flatnonzero(np.isfinite(t))
        keep = mask[hit_idx]  # hits that won the depth test
        pts = origin + dirs[hit_idx[keep]] * t[hit_idx[keep], None]
        shade = _shade(
            obj,
            pts.astype(np.float32),
            normals[keep],
            None if uv_ab is None else uv_ab[keep],
            scene.light,
        )
        img[hit_idx[keep]] = shade

    rgb = np.clip(np.rint(img), 0, 255).astype(np.uint8).reshape(h, w, 3)
    # camera-frame z = t * z-component of the camera-frame unit ray
    depth = np.where(np.isfinite(best_t), best_t * rays_cam[:, 2], np.nan)
    return rgb, depth.reshape(h, w), best_obj.reshape(h, w), own_hits


def _pack_scene(scene):
    """Flatten objects into the parallel arrays the jitted kernel wants."""
    m = len(scene.objects)
    kinds = np.zeros(m, np.int32)
    anchors = np.zeros((m, 3))
    eus = np.zeros((m, 3))
    evs = np.zeros((m, 3))
    nrms = np.zeros((m, 3))
    radii = np.zeros(m)
    tex_kinds = np.zeros(m, np.int32)
    cells = np.ones(m)
    colors = np.zeros((m, 3), np.float32)
    colors2 = np.zeros((m, 3), np.float32)
    tile_idx = np.zeros(m, np.int32)
    px_per_m = np.ones(m)
    tile_list = []
    tile_by_seed = {}
    for k, o in enumerate(scene.objects):
        anchors[k] = o.anchor()
        if o.kind == "sphere":
            kinds[k] = _render.KIND_SPHERE
            radii[k] = o.radius
        else:
            kinds[k] = _render.KIND_QUAD
            eus[k] = o.edge_u
            evs[k] = o.edge_v
            nn = np.cross(eus[k], evs[k])
            nrms[k] = nn / np.linalg.norm(nn)
        tex = o.texture
        tkind = tex.get("type", "noise")
        colors[k] = np.asarray(tex.get("color", (200, 200, 200)), np.float32)
        if tkind == "solid":
            tex_kinds[k] = _render.TEX_SOLID
        elif tkind == "checker":
            tex_kinds[k] = _render.TEX_CHECKER
            cells[k] = float(tex.get("cell", 0.1))
            colors2[k] = np.asarray(tex.get("color2", (40, 40, 40)), np.float32)
        elif tkind == "noise":
            tex_kinds[k] = _render.TEX_NOISE
            seed = int(tex.get("seed", 1))
            px_per_m[k] = _TILE_N / (_TILE_CELLS * float(tex.get("scale", 0.08)))
            if seed not in tile_by_seed:
                tile_by_seed[seed] = len(tile_list)
                tile_list.append(_noise_tile(seed))
            tile_idx[k] = tile_by_seed[seed]
        else:
            raise ValueError(f"unknown texture type {tkind!r}")
    tiles = (
        np.stack(tile_list)
        if tile_list
        else np.zeros((1, _TILE_N, _TILE_N), np.float32)
    )
    return (kinds, anchors, eus, evs, nrms, radii, tex_kinds, cells,
            colors, colors2, tile_idx, px_per_m, tiles)


def _render_eye(scene, intr, R_wc, origin):
    h, w = intr.height, intr.width
    light = np.asarray(scene.light, dtype=float)
    light = light / np.linalg.norm(light)
    rgb, depth, objidx, own_hits = _render.render_eye(
        _ray_grid(intr),
        np.ascontiguousarray(R_wc),
        np.ascontiguousarray(origin, dtype=float),
        *_pack_scene(scene),
        light,
        AMBIENT,
        np.uint8(BACKGROUND_GRAY),
    )
    return (rgb.reshape(h, w, 3), depth.reshape(h, w),
            objidx.reshape(h, w), own_hits)


def camera_pose(gimbal_deg, eye_offset_m):
    """World pose of one eye: (R camera->world, camera center world)."""
    R = gimbal_to_camera(*gimbal_deg)
    return R, R @ np.asarray([eye_offset_m, 0.0, 0.0])


def render_stereo(scene: Scene, rig: StereoRig, gimbal_deg, t: float) -> StereoFrame:
    """Render both eyes at gimbal angles (yaw, pitch, roll degrees).

    Ground truth rides on the left eye: exact depth along its optical axis
    and tight boxes for objects at least half unoccluded there.
    """
    half = rig.baseline / 2.0
    R_l, c_l = camera_pose(gimbal_deg, -half)
    # right eye honors the calibrated relative pose: x_r = R_rel x_l + t_rel
    R_r = R_l @ rig.relative_rotation.T
    c_r = c_l - R_r @ rig.relative_translation

    left_rgb, depth, obj_map, own_hits = _render_eye(scene, rig.left, R_l, c_l)
    right_rgb, _, _, _ = _render_eye(scene, rig.right, R_r, c_r)

    dets = []
    cam_z = R_l[:, 2]  # left optical axis in world coords
    for k, obj in enumerate(scene.objects):
        if own_hits[k] == 0:
            continue
        vis_v, vis_u = np.nonzero(obj_map == k)
        if vis_u.size / own_hits[k] < MIN_VISIBLE_FRACTION:
            continue
        if obj.kind == "sphere":
            center = obj.anchor()
        else:
            center = obj.anchor() + 0.5 * (
                np.asarray(obj.edge_u) + np.asarray(obj.edge_v)
            )
        dets.append(
            Detection(
                label=obj.label,
                confidence=1.0,
                bbox=(
                    float(vis_u.min()),
                    float(vis_v.min()),
                    float(vis_u.max() + 1),
                    float(vis_v.max() + 1),
                ),
                distance_m=float((center - c_l) @ cam_z),
            )
        )

    return StereoFrame(
        left=ImageBuffer(left_rgb),
        right=ImageBuffer(right_rgb),
        gt_depth_left=DepthMap(values=depth, focal_px=rig.left.fx, baseline_m=rig.baseline),
        gt_detections=dets,
        sim_time=float(t),
        gimbal_angles=tuple(float(a) for a in gimbal_deg),
    )


def generate_chessboard_views(intr_gt, poses, rig=None, corners=(9, 6), square=0.03):
    """Exact chessboard correspondences through the full lens model.

    Mono: returns a CorrespondenceSet per pose for intr_gt. With a rig the
    result is (left_sets, right_sets) with the right camera placed by the
    rig's relative pose. Any view whose corners leave the frame raises a
    ValueError naming it.
    """
    from .calibration import CorrespondenceSet  # local: avoids import cycle
    from .camera_model import project_points

    nx, ny = corners
    gx, gy = np.meshgrid(np.arange(nx) * square, np.arange(ny) * square)
    board = np.column_stack([gx.ravel(), gy.ravel()])
    board3 = np.column_stack([board, np.zeros(len(board))])

    def project_all(intr, pose, view_id):
        cam = pose.apply(board3)
        uv = project_points(cam, intr)
        in_frame = (
            np.all(np.isfinite(uv))
            and uv[:, 0].min() >= 0
            and uv[:, 1].min() >= 0
            and uv[:, 0].max() < intr.width
            and uv[:, 1].max() < intr.height
        )
        if not in_frame:
            raise ValueError(f"board leaves the frame in view {view_id!r}")
        return CorrespondenceSet(view_id, board, uv)

    if rig is None:
        return [project_all(intr_gt, p, f"view-{i}") for i, p in enumerate(poses)]

    # the two cameras share each view id: one board presentation, two eyes
    left_sets, right_sets = [], []
    for i, p in enumerate(poses):
        left_sets.append(project_all(rig.left, p, f"view-{i}"))
        p_r = Pose(
            rig.relative_rotation @ p.rotation,
            rig.relative_rotation @ p.translation + rig.relative_translation,
        )
        right_sets.append(project_all(rig.right, p_r, f"view-{i}"))
    return left_sets, right_sets
