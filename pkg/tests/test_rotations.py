import numpy as np
import pytest
from hypothesis import given, strategies as st

from stereosentry.rotations import (
    axis_angle_to_matrix,
    gimbal_to_camera,
    matrix_to_axis_angle,
    nearest_rotation,
    rot_x,
    rot_y,
    rot_z,
)


def test_elementary_rotations_at_90deg():
    assert np.allclose(rot_z(90.0) @ [1, 0, 0], [0, 1, 0], atol=1e-12)
    assert np.allclose(rot_x(90.0) @ [0, 1, 0], [0, 0, 1], atol=1e-12)
    assert np.allclose(rot_y(90.0) @ [0, 0, 1], [1, 0, 0], atol=1e-12)


def test_axis_angle_round_trip_simple():
    a = np.array([0.0, 0.0, np.pi / 2])
    R = axis_angle_to_matrix(a)
    assert np.allclose(R, rot_z(90.0), atol=1e-12)
    assert np.allclose(matrix_to_axis_angle(R), a, atol=1e-12)


def test_axis_angle_identity_and_near_pi():
    assert np.allclose(axis_angle_to_matrix([0, 0, 0]), np.eye(3))
    assert np.allclose(matrix_to_axis_angle(np.eye(3)), 0.0)
    # just under pi, where the sin-based extraction loses accuracy
    a = np.array([1.0, 0.2, -0.4])
    a = a / np.linalg.norm(a) * (np.pi - 1e-7)
    R = axis_angle_to_matrix(a)
    assert np.allclose(matrix_to_axis_angle(R), a, atol=1e-6)


@given(
    st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    st.floats(1e-6, np.pi - 1e-3),
)
def test_axis_angle_round_trip_property(axis, angle):
    axis = np.asarray(axis)
    n = np.linalg.norm(axis)
    if n < 1e-3:
        return
    a = axis / n * angle
    R = axis_angle_to_matrix(a)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.isclose(np.linalg.det(R), 1.0, atol=1e-12)
    assert np.allclose(matrix_to_axis_angle(R), a, atol=1e-9)


def test_nearest_rotation_repairs_scaling_and_reflection():
    R = rot_z(30.0) @ rot_x(-50.0)
    assert np.allclose(nearest_rotation(1.7 * R), R, atol=1e-12)
    M = R.copy()
    M[:, 2] *= -1  # det = -1
    fixed = nearest_rotation(M)
    assert np.isclose(np.linalg.det(fixed), 1.0, atol=1e-12)


def test_gimbal_frame_conventions():
    # positive yaw swings the view direction toward world +x (rightward)
    view = gimbal_to_camera(30.0, 0.0, 0.0) @ [0, 0, 1]
    assert view[0] > 0 and abs(view[1]) < 1e-12
    # positive pitch tilts the view up, i.e. toward world -y (y points down)
    view = gimbal_to_camera(0.0, 30.0, 0.0) @ [0, 0, 1]
    assert view[1] < 0 and abs(view[0]) < 1e-12
    # roll spins about the optical axis and leaves the view direction alone
    view = gimbal_to_camera(0.0, 0.0, 45.0) @ [0, 0, 1]
    assert np.allclose(view, [0, 0, 1], atol=1e-12)


@pytest.mark.parametrize("yaw,pitch,roll", [(10, -20, 5), (-45, 30, -90)])
def test_gimbal_matrix_is_rotation(yaw, pitch, roll):
    R = gimbal_to_camera(yaw, pitch, roll)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
    assert np.isclose(np.linalg.det(R), 1.0, atol=1e-12)
