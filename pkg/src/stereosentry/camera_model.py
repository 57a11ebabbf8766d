"""Pinhole camera with Brown radial-tangential distortion.

Conventions used throughout the project: camera frame is x-right, y-down,
z-forward; pixel origin is the top-left corner with u rightward and v
downward. Integer pixel coordinates address pixel centers.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np


class OutOfModelError(ValueError):
    """Undistortion did not converge; the input lies outside the model's
    invertible domain."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters plus the four Brown distortion coefficients."""

    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the sensor")

    @property
    def K(self):
        """3x3 intrinsic matrix (zero skew)."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def with_distortion(self, k1=0.0, k2=0.0, p1=0.0, p2=0.0):
        return replace(self, k1=k1, k2=k2, p1=p1, p2=p2)

    def to_dict(self):
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "k1": self.k1,
            "k2": self.k2,
            "p1": self.p1,
            "p2": self.p2,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in (
            "fx", "fy", "cx", "cy", "k1", "k2", "p1", "p2", "width", "height")})


def default_intrinsics(width=640, height=480, fov_deg=60.0):
    """Intrinsics of the reference webcam: 60 deg horizontal FOV at 640x480,
    which puts the focal length at (width/2)/tan(30 deg) = 554.2563 px."""
    f = (width / 2.0) / np.tan(np.deg2rad(fov_deg / 2.0))
    return CameraIntrinsics(fx=f, fy=f, cx=width / 2.0, cy=height / 2.0,
                            width=width, height=height)


@dataclass(frozen=True)
class Pose:
    """Rigid world-to-camera transform: x_cam = rotation @ x_world + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if R.shape != (3, 3):
            raise ValueError("rotation must be 3x3")
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-9:
            raise ValueError("rotation must be orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    def apply(self, points):
        """Transform (..., 3) world points into the camera frame."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def inverse(self):
        return Pose(self.rotation.T, -self.rotation.T @ self.translation)


@dataclass(frozen=True)
class StereoRig:
    """Two cameras rigidly mounted: x_right = R @ x_left + t, with t in meters.

    The reference hardware has the cameras 72 mm apart, so the default
    relative translation is (-0.072, 0, 0): the right camera sits 72 mm
    along the left camera's +x axis.
    """

    left: CameraIntrinsics
    right: CameraIntrinsics
    relative_rotation: np.ndarray = field(
        default_factory=lambda: np.eye(3))
    relative_translation: np.ndarray = field(
        default_factory=lambda: np.array([-0.072, 0.0, 0.0]))

    def __post_init__(self):
        R = np.asarray(self.relative_rotation, dtype=float)
        t = np.asarray(self.relative_translation, dtype=float).reshape(3)
        if np.linalg.norm(t) <= 0:
            raise ValueError("baseline must be positive")
        object.__setattr__(self, "relative_rotation", R)
        object.__setattr__(self, "relative_translation", t)

    @property
    def baseline(self):
        return float(np.linalg.norm(self.relative_translation))

    def to_dict(self):
        return {
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
            "relative_rotation": [float(x) for x in
                                  np.asarray(self.relative_rotation).ravel()],
            "relative_translation": [float(x) for x in
                                     np.asarray(self.relative_translation)],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            left=CameraIntrinsics.from_dict(d["left"]),
            right=CameraIntrinsics.from_dict(d["right"]),
            relative_rotation=np.array(d["relative_rotation"], dtype=float).reshape(3, 3),
            relative_translation=np.array(d["relative_translation"], dtype=float),
        )

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def default_rig():
    """Parallel zero-distortion rig with the 72 mm baseline."""
    intr = default_intrinsics()
    return StereoRig(left=intr, right=intr)


@dataclass
class ImageBuffer:
    """Row-major byte image, origin top-left. `pixels` is (h, w) uint8 for
    gray or (h, w, 3) uint8 for RGB."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.uint8:
            raise ValueError("pixels must be uint8")
        if px.ndim == 2:
            pass
        elif px.ndim == 3 and px.shape[2] == 3:
            pass
        else:
            raise ValueError("pixels must be (h, w) gray or (h, w, 3) RGB")
        self.pixels = px

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def channels(self):
        return 1 if self.pixels.ndim == 2 else 3

    def to_gray(self):
        """Luma (Rec.601 integer approximation) for RGB; identity for gray."""
        if self.channels == 1:
            return self
        px = self.pixels.astype(np.uint32)
        gray = (299 * px[:, :, 0] + 587 * px[:, :, 1] + 114 * px[:, :, 2] + 500) // 1000
        return ImageBuffer(gray.astype(np.uint8))


def distort_normalized(x, y, intr):
    """Apply the Brown model to normalized image coordinates.

    Accepts scalars or arrays; broadcasts elementwise.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    radial = 1.0 + intr.k1 * r2 + intr.k2 * r2 * r2
    xd = x * radial + 2.0 * intr.p1 * x * y + intr.p2 * (r2 + 2.0 * x * x)
    yd = y * radial + intr.p1 * (r2 + 2.0 * y * y) + 2.0 * intr.p2 * x * y
    return xd, yd


def undistort_normalized(xd, yd, intr, max_iter=20, tol=1e-12):
    """Invert distort_normalized by fixed-point iteration.

    Starts at the distorted point and iterates
    x <- (x_d - tangential(x, y)) / radial(x, y). Raises OutOfModelError when
    the forward residual after the loop exceeds 1e-9, which happens for
    inputs outside the model's invertible domain.
    """
    xd = np.asarray(xd, dtype=float)
    yd = np.asarray(yd, dtype=float)
    x, y = xd.copy(), yd.copy()
    for _ in range(max_iter):
        r2 = x * x + y * y
        radial = 1.0 + intr.k1 * r2 + intr.k2 * r2 * r2
        tang_x = 2.0 * intr.p1 * x * y + intr.p2 * (r2 + 2.0 * x * x)
        tang_y = intr.p1 * (r2 + 2.0 * y * y) + 2.0 * intr.p2 * x * y
        x_new = (xd - tang_x) / radial
        y_new = (yd - tang_y) / radial
        step = np.max(np.abs(x_new - x) + np.abs(y_new - y))
        x, y = x_new, y_new
        if step < tol:
            break
    back_x, back_y = distort_normalized(x, y, intr)
    residual = np.max(np.abs(back_x - xd) + np.abs(back_y - yd))
    if residual > 1e-9:
        raise OutOfModelError(
            f"undistortion did not converge (residual {residual:.3g})")
    return x, y


def project_point(p, intr):
    """Project a camera-frame point to pixels, or None when out of view.

    Points at or behind the camera plane (z <= 1e-6) and projections falling
    outside [0, width) x [0, height) are out of view.
    """
    p = np.asarray(p, dtype=float)
    if p[2] <= 1e-6:
        return None
    x, y = p[0] / p[2], p[1] / p[2]
    xd, yd = distort_normalized(x, y, intr)
    u = intr.fx * xd + intr.cx
    v = intr.fy * yd + intr.cy
    if not (0 <= u < intr.width and 0 <= v < intr.height):
        return None
    return (float(u), float(v))


def project_points(points, intr):
    """Vectorized projection of (n, 3) camera-frame points.

    Returns (n, 2) pixel coordinates with NaN rows for points behind the
    camera. No field-of-view clipping; callers that need it check bounds.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    z = p[:, 2]
    ok = z > 1e-6
    x = np.where(ok, p[:, 0] / np.where(ok, z, 1.0), np.nan)
    y = np.where(ok, p[:, 1] / np.where(ok, z, 1.0), np.nan)
    xd, yd = distort_normalized(x, y, intr)
    uv = np.stack([intr.fx * xd + intr.cx, intr.fy * yd + intr.cy], axis=1)
    uv[~ok] = np.nan
    return uv


def pixel_ray(u, v, intr):
    """Unit ray in the camera frame through pixel (u, v)."""
    x, y = undistort_normalized(
        (np.asarray(u, dtype=float) - intr.cx) / intr.fx,
        (np.asarray(v, dtype=float) - intr.cy) / intr.fy,
        intr,
    )
    d = np.stack(np.broadcast_arrays(x, y, np.ones_like(x)), axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)
