"""Rotation helpers shared by the camera, calibration, and gimbal code.

All matrices are 3x3 right-handed rotations acting on column vectors.
Angles are in degrees at the API surface (the rest of the project speaks
degrees); axis-angle vectors are in radians as usual.
"""

import numpy as np


def rot_x(deg):
    """Rotation about the x axis by `deg` degrees."""
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def rot_y(deg):
    """Rotation about the y axis by `deg` degrees."""
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def rot_z(deg):
    """Rotation about the z axis by `deg` degrees."""
    a = np.deg2rad(deg)
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def axis_angle_to_matrix(r):
    """Rodrigues: 3-vector (axis * angle in radians) -> rotation matrix."""
    r = np.asarray(r, dtype=float)
    theta = np.linalg.norm(r)
    if theta < 1e-12:
        # first-order expansion keeps the map smooth near zero
        K = skew(r)
        return np.eye(3) + K
    k = r / theta
    K = skew(k)
    return np.eye(3) + np.sin(theta) * K + (1.0 - np.cos(theta)) * (K @ K)


def matrix_to_axis_angle(R):
    """Inverse Rodrigues. Returns the 3-vector axis * angle (radians)."""
    R = np.asarray(R, dtype=float)
    cos_theta = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(cos_theta)
    if theta < 1e-9:
        # antisymmetric part carries the small rotation
        return 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if np.pi - theta < 1e-6:
        # near pi the antisymmetric part vanishes; recover the axis from R + I
        A = R + np.eye(3)
        axis = A[:, np.argmax(np.diag(A))]
        axis = axis / np.linalg.norm(axis)
        return theta * axis
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return theta * axis / (2.0 * np.sin(theta))


def skew(v):
    """Cross-product matrix of a 3-vector."""
    x, y, z = v
    return np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]], dtype=float)


def nearest_rotation(M):
    """Closest rotation matrix to M in Frobenius norm (SVD, det fixed to +1)."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=float))
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U = U.copy()
        U[:, -1] *= -1
        R = U @ Vt
    return R


def gimbal_to_camera(yaw_deg, pitch_deg, roll_deg):
    """Camera-to-world rotation of the gimbal head.

    World frame equals the camera frame at zero angles: x right, y down,
    z forward (so world "up" is -y). Composition is intrinsic
    yaw -> pitch -> roll:

      * yaw about the vertical axis, positive turns the view right (+x),
      * pitch about the post-yaw camera x axis, positive turns the view up,
      * roll about the viewing axis (camera z).

    With y pointing down, "positive yaw turns right" is a right-handed
    rotation about +y.
    """
    return rot_y(yaw_deg) @ rot_x(pitch_deg) @ rot_z(roll_deg)
