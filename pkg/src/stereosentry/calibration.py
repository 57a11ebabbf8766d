"""Chessboard camera calibration and stereo rectification.

The mono pipeline follows the classic plane-based recipe: per-view
homographies by normalized DLT, closed-form intrinsics from the image of
the absolute conic, per-view extrinsics, a linear radial-distortion
estimate, and a damped Gauss-Newton refinement of everything. Stereo adds
relative-pose averaging over shared views and a Fusiello-style rectifying
rotation pair.

Corner detection is out of scope: calibration consumes correspondence sets
(board plane coordinates in meters paired with pixel observations).
"""

import json
from dataclasses import dataclass

import numpy as np

from .camera_model import (
    CameraIntrinsics,
    Pose,
    distort_normalized,
    project_points,
)
from .rotations import (
    axis_angle_to_matrix,
    matrix_to_axis_angle,
    nearest_rotation,
)


class DegenerateInputError(ValueError):
    """Too few or geometrically degenerate correspondences."""


class EstimationError(RuntimeError):
    """A closed-form estimation step failed (bad view set or excess noise)."""


class NumericalError(RuntimeError):
    """Refinement produced non-finite values; carries the iteration index."""

    def __init__(self, message, iteration):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


@dataclass(frozen=True)
class CorrespondenceSet:
    """Board-plane points (X, Y in meters, Z = 0) matched one-to-one with
    pixel observations for a single view."""

    view_id: str
    board_points: np.ndarray  # (n, 2) meters
    image_points: np.ndarray  # (n, 2) pixels

    def __post_init__(self):
        b = np.asarray(self.board_points, dtype=float).reshape(-1, 2)
        i = np.asarray(self.image_points, dtype=float).reshape(-1, 2)
        if len(b) != len(i):
            raise ValueError("board and image point counts differ")
        object.__setattr__(self, "board_points", b)
        object.__setattr__(self, "image_points", i)

    def __len__(self):
        return len(self.board_points)


def load_correspondences(path):
    """Read a correspondence JSON file: a list of views, each
    {"view_id": ..., "board": [[X, Y], ...], "image": [[u, v], ...]}."""
    with open(path) as f:
        views = json.load(f)
    return [
        CorrespondenceSet(str(v["view_id"]), v["board"], v["image"])
        for v in views
    ]


def save_correspondences(views, path):
    data = [
        {
            "view_id": v.view_id,
            "board": v.board_points.tolist(),
            "image": v.image_points.tolist(),
        }
        for v in views
    ]
    with open(path, "w") as f:
        json.dump(data, f)
        f.write("\n")


def _normalization(points):
    """Hartley normalization: centroid to origin, mean distance sqrt(2)."""
    centroid = points.mean(axis=0)
    d = np.linalg.norm(points - centroid, axis=1).mean()
    if d < 1e-12:
        raise DegenerateInputError("all points coincide")
    s = np.sqrt(2.0) / d
    return np.array(
        [[s, 0, -s * centroid[0]], [0, s, -s * centroid[1]], [0, 0, 1]]
    )


def estimate_homography(c: CorrespondenceSet):
    """Board-plane-to-image homography by normalized DLT.

    Returns a 3x3 matrix scaled so H[2, 2] = 1. Raises DegenerateInputError
    for fewer than 4 points or collinear board points.
    """
    if len(c) < 4:
        raise DegenerateInputError("homography needs at least 4 points")
    bp = c.board_points
    # collinearity: second principal extent of centered board points
    sv = np.linalg.svd(bp - bp.mean(axis=0), compute_uv=False)
    if sv[1] < 1e-9 * max(sv[0], 1.0):
        raise DegenerateInputError("board points are collinear")

    Tb = _normalization(bp)
    Ti = _normalization(c.image_points)
    b_h = np.column_stack([bp, np.ones(len(c))]) @ Tb.T
    i_h = np.column_stack([c.image_points, np.ones(len(c))]) @ Ti.T

    A = np.zeros((2 * len(c), 9))
    X, Y = b_h[:, 0], b_h[:, 1]
    u, v = i_h[:, 0], i_h[:, 1]
    A[0::2, 0] = X
    A[0::2, 1] = Y
    A[0::2, 2] = 1.0
    A[0::2, 6] = -u * X
    A[0::2, 7] = -u * Y
    A[0::2, 8] = -u
    A[1::2, 3] = X
    A[1::2, 4] = Y
    A[1::2, 5] = 1.0
    A[1::2, 6] = -v * X
    A[1::2, 7] = -v * Y
    A[1::2, 8] = -v

    _, s, Vt = np.linalg.svd(A)
    if s[-2] < 1e-12 * s[0]:
        raise DegenerateInputError("degenerate correspondence configuration")
    H = Vt[-1].reshape(3, 3)
    H = np.linalg.inv(Ti) @ H @ Tb
    if abs(H[2, 2]) > 1e-12:
        H = H / H[2, 2]
    return H


def apply_homography(H, points):
    """Map (n, 2) points through H with perspective division."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    q = np.column_stack([p, np.ones(len(p))]) @ H.T
    return q[:, :2] / q[:, 2:3]


def _v_ij(H, i, j):
    # constraint vector on the absolute-conic image; h_i is the i-th column
    hi, hj = H[:, i], H[:, j]
    return np.array(
        [
            hi[0] * hj[0],
            hi[0] * hj[1] + hi[1] * hj[0],
            hi[1] * hj[1],
            hi[2] * hj[0] + hi[0] * hj[2],
            hi[2] * hj[1] + hi[1] * hj[2],
            hi[2] * hj[2],
        ]
    )


def intrinsics_from_homographies(hs, size):
    """Closed-form intrinsics from >= 3 homographies of distinct board
    orientations. Distortion coefficients are zeroed."""
    if len(hs) < 3:
        raise EstimationError("intrinsics need at least 3 views")
    V = []
    for H in hs:
        V.append(_v_ij(H, 0, 1))
        V.append(_v_ij(H, 0, 0) - _v_ij(H, 1, 1))
    V = np.asarray(V)
    _, _, Vt = np.linalg.svd(V)
    b = Vt[-1]
    if b[0] < 0:
        b = -b
    b0, b1, b2, b3, b4, b5 = b

    den = b0 * b2 - b1 * b1
    if b0 <= 0 or den <= 0:
        raise EstimationError("conic image not positive definite")
    v0 = (b1 * b3 - b0 * b4) / den
    lam = b5 - (b3 * b3 + v0 * (b1 * b3 - b0 * b4)) / b0
    if lam <= 0 or lam / b0 <= 0:
        raise EstimationError("conic image not positive definite")
    alpha = np.sqrt(lam / b0)
    beta = np.sqrt(lam * b0 / den)
    gamma = -b1 * alpha * alpha * beta / lam
    u0 = gamma * v0 / beta - b3 * alpha * alpha / lam

    width, height = size
    if not (0 <= u0 < width and 0 <= v0 < height):
        raise EstimationError("estimated principal point outside the sensor")
    return CameraIntrinsics(
        fx=float(alpha), fy=float(beta), cx=float(u0), cy=float(v0),
        width=int(width), height=int(height),
    )


def extrinsics_from_homography(H, intr: CameraIntrinsics) -> Pose:
    """Board pose (world = board plane, Z = 0) from its homography."""
    Kinv = np.linalg.inv(intr.K)
    h1, h2, h3 = H[:, 0], H[:, 1], H[:, 2]
    lam = 1.0 / np.linalg.norm(Kinv @ h1)
    if not np.isfinite(lam):
        raise EstimationError("singular intrinsic matrix")
    r1 = lam * (Kinv @ h1)
    r2 = lam * (Kinv @ h2)
    t = lam * (Kinv @ h3)
    if t[2] < 0:
        # board must sit in front of the camera
        r1, r2, t = -r1, -r2, -t
    r3 = np.cross(r1, r2)
    R = nearest_rotation(np.column_stack([r1, r2, r3]))
    return Pose(R, t)


def estimate_distortion(views, intr: CameraIntrinsics):
    """Linear least-squares radial distortion (k1, k2) from posed views.

    `views` is a list of (CorrespondenceSet, Pose) pairs. Tangential terms
    stay zero at this stage.
    """
    if len(views) < 2:
        raise EstimationError("distortion estimation needs at least 2 views")
    rows = []
    rhs = []
    for corr, pose in views:
        board3 = np.column_stack(
            [corr.board_points, np.zeros(len(corr))])
        cam = pose.apply(board3)
        x = cam[:, 0] / cam[:, 2]
        y = cam[:, 1] / cam[:, 2]
        r2 = x * x + y * y
        u = intr.fx * x + intr.cx
        v = intr.fy * y + intr.cy
        du = corr.image_points[:, 0] - u
        dv = corr.image_points[:, 1] - v
        rows.append(np.column_stack([(u - intr.cx) * r2, (u - intr.cx) * r2 * r2]))
        rows.append(np.column_stack([(v - intr.cy) * r2, (v - intr.cy) * r2 * r2]))
        rhs.append(du)
        rhs.append(dv)
    D = np.vstack(rows)
    d = np.concatenate(rhs)
    sol, _, rank, _ = np.linalg.lstsq(D, d, rcond=None)
    if rank < 2:
        raise EstimationError("distortion system is rank deficient")
    return float(sol[0]), float(sol[1])


def reprojection_rms(intr, poses, views):
    """Root-mean-square pixel reprojection error over all views."""
    sq = 0.0
    n = 0
    for pose, corr in zip(poses, views):
        board3 = np.column_stack([corr.board_points, np.zeros(len(corr))])
        uv = project_points(pose.apply(board3), intr)
        sq += float(np.sum((uv - corr.image_points) ** 2))
        n += len(corr)
    return np.sqrt(sq / n)


def _pack(intr, poses):
    p = [intr.fx, intr.fy, intr.cx, intr.cy, intr.k1, intr.k2, intr.p1, intr.p2]
    for pose in poses:
        p.extend(matrix_to_axis_angle(pose.rotation))
        p.extend(pose.translation)
    return np.asarray(p, dtype=float)


def _unpack(p, width, height, n_views):
    intr = CameraIntrinsics(
        fx=p[0], fy=p[1], cx=p[2], cy=p[3],
        k1=p[4], k2=p[5], p1=p[6], p2=p[7],
        width=width, height=height,
    )
    poses = []
    for i in range(n_views):
        base = 8 + 6 * i
        R = axis_angle_to_matrix(p[base : base + 3])
        poses.append(Pose(R, p[base + 3 : base + 6]))
    return intr, poses


def _residuals(p, views):
    # raw (un-validated) evaluation used inside the optimizer
    fx, fy, cx, cy, k1, k2, p1, p2 = p[:8]
    out = []
    for i, corr in enumerate(views):
        base = 8 + 6 * i
        R = axis_angle_to_matrix(p[base : base + 3])
        t = p[base + 3 : base + 6]
        board3 = np.column_stack([corr.board_points, np.zeros(len(corr))])
        cam = board3 @ R.T + t
        x = cam[:, 0] / cam[:, 2]
        y = cam[:, 1] / cam[:, 2]
        r2 = x * x + y * y
        radial = 1.0 + k1 * r2 + k2 * r2 * r2
        xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
        yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
        out.append(fx * xd + cx - corr.image_points[:, 0])
        out.append(fy * yd + cy - corr.image_points[:, 1])
    return np.concatenate(out)


def refine_calibration(intr, poses, views, max_iter=100, rel_tol=1e-10):
    """Damped Gauss-Newton refinement of intrinsics, distortion, and
    per-view poses (axis-angle), minimizing total squared pixel error.

    Returns (intrinsics, poses, rms_px). The returned RMS never exceeds the
    initial one: only improving steps are accepted. Damping starts at 1e-3,
    grows 10x on a rejected step and shrinks 10x on an accepted one.
    """
    if len(views) < 3:
        raise EstimationError("refinement needs at least 3 views")
    width, height = intr.width, intr.height
    p = _pack(intr, poses)
    if not np.all(np.isfinite(p)):
        raise NumericalError("non-finite initial parameters", 0)

    r = _residuals(p, views)
    if not np.all(np.isfinite(r)):
        raise NumericalError("non-finite residuals", 0)
    rms = np.sqrt(np.mean(r * r))
    damping = 1e-3

    for it in range(1, max_iter + 1):
        # forward-difference Jacobian; parameter-scaled steps
        J = np.empty((len(r), len(p)))
        for j in range(len(p)):
            h = 1e-7 * max(1.0, abs(p[j]))
            pj = p.copy()
            pj[j] += h
            J[:, j] = (_residuals(pj, views) - r) / h
        if not np.all(np.isfinite(J)):
            raise NumericalError("non-finite Jacobian", it)

        JtJ = J.T @ J
        g = J.T @ r
        improved = False
        while damping < 1e12:
            try:
                step = np.linalg.solve(JtJ + damping * np.eye(len(p)), -g)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            p_new = p + step
            r_new = _residuals(p_new, views)
            if not np.all(np.isfinite(r_new)):
                raise NumericalError("non-finite residuals", it)
            rms_new = np.sqrt(np.mean(r_new * r_new))
            if rms_new < rms:
                improvement = (rms - rms_new) / max(rms, 1e-300)
                p, r, rms = p_new, r_new, rms_new
                damping = max(damping / 10.0, 1e-12)
                improved = True
                break
            damping *= 10.0
        if not improved or improvement < rel_tol:
            break

    intr_out, poses_out = _unpack(p, width, height, len(views))
    return intr_out, poses_out, float(rms)


def calibrate_camera(views, size=(640, 480)):
    """Full mono pipeline: DLT homographies, closed-form intrinsics,
    extrinsics, linear distortion, Gauss-Newton refinement.

    Returns (intrinsics, poses, rms_px)."""
    hs = [estimate_homography(v) for v in views]
    intr0 = intrinsics_from_homographies(hs, size)
    poses0 = [extrinsics_from_homography(h, intr0) for h in hs]
    k1, k2 = estimate_distortion(list(zip(views, poses0)), intr0)
    intr0 = intr0.with_distortion(k1=k1, k2=k2)
    return refine_calibration(intr0, poses0, views)


def stereo_extrinsics(poses_left, poses_right):
    """Average the per-view relative pose of a rigid two-camera rig.

    Per view: R_i = R_right @ R_left^T and t_i = t_right - R_i @ t_left.
    Rotations are averaged by chordal mean (sum then nearest rotation),
    translations arithmetically.
    """
    if not poses_left or not poses_right:
        raise ValueError("pose lists must be non-empty")
    if len(poses_left) != len(poses_right):
        raise ValueError("pose lists must have equal length")
    Rs = []
    ts = []
    for pl, pr in zip(poses_left, poses_right):
        Ri = pr.rotation @ pl.rotation.T
        Rs.append(Ri)
        ts.append(pr.translation - Ri @ pl.translation)
    R = nearest_rotation(np.sum(Rs, axis=0))
    t = np.mean(ts, axis=0)
    return R, t


@dataclass(frozen=True)
class RectifyMaps:
    """Rectifying rotations, the shared pinhole model, and per-destination
    source-coordinate remaps for both images.

    Remaps are (h, w, 2) float arrays of source (u, v); NaN marks
    destinations with no source (behind-camera directions)."""

    rot_left: np.ndarray
    rot_right: np.ndarray
    new_intrinsics: CameraIntrinsics
    remap_left: np.ndarray
    remap_right: np.ndarray
    rectified_baseline: float


def _build_remap(new_intr, rect_rot, orig_intr):
    h, w = new_intr.height, new_intr.width
    u, v = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    dirs = np.stack(
        [
            (u - new_intr.cx) / new_intr.fx,
            (v - new_intr.cy) / new_intr.fy,
            np.ones_like(u),
        ],
        axis=-1,
    )
    # rectified frame -> original camera frame
    d = dirs @ rect_rot  # == dirs @ (rect_rot^T)^T
    z = d[..., 2]
    ok = z > 1e-9
    zs = np.where(ok, z, 1.0)
    xd, yd = distort_normalized(d[..., 0] / zs, d[..., 1] / zs, orig_intr)
    src_u = np.where(ok, orig_intr.fx * xd + orig_intr.cx, np.nan)
    src_v = np.where(ok, orig_intr.fy * yd + orig_intr.cy, np.nan)
    return np.stack([src_u, src_v], axis=-1)


def compute_rectification(rig) -> RectifyMaps:
    """Rotate both cameras onto a shared, baseline-aligned orientation.

    The relative rotation is split evenly between the cameras, then both are
    turned so the new x axis runs along the baseline. The shared pinhole
    model is the element-wise mean of the two cameras with zero distortion.
    """
    if rig.baseline <= 0:
        raise ValueError("rig baseline must be positive")
    a = matrix_to_axis_angle(rig.relative_rotation)
    half_l = axis_angle_to_matrix(a / 2.0)   # left gets +half
    half_r = axis_angle_to_matrix(-a / 2.0)  # right gets -half

    # right camera center in the left frame, expressed mid-way
    c_right = -rig.relative_rotation.T @ rig.relative_translation
    b = half_l @ c_right
    e1 = b / np.linalg.norm(b)
    e2 = np.cross([0.0, 0.0, 1.0], e1)
    n2 = np.linalg.norm(e2)
    if n2 < 1e-9:
        raise EstimationError("baseline parallel to the optical axis")
    e2 = e2 / n2
    e3 = np.cross(e1, e2)
    align = np.stack([e1, e2, e3])

    rot_left = align @ half_l
    rot_right = align @ half_r

    li, ri = rig.left, rig.right
    new_intr = CameraIntrinsics(
        fx=(li.fx + ri.fx) / 2.0,
        fy=(li.fy + ri.fy) / 2.0,
        cx=(li.cx + ri.cx) / 2.0,
        cy=(li.cy + ri.cy) / 2.0,
        width=li.width,
        height=li.height,
    )
    return RectifyMaps(
        rot_left=rot_left,
        rot_right=rot_right,
        new_intrinsics=new_intr,
        remap_left=_build_remap(new_intr, rot_left, li),
        remap_right=_build_remap(new_intr, rot_right, ri),
        rectified_baseline=rig.baseline,
    )
