"""Shared synthetic-geometry fixtures.

Ground-truth cameras and board views are generated analytically so every
estimator in the suite can be checked against exact expected values.
"""

import numpy as np
import pytest

from stereosentry.calibration import CorrespondenceSet
from stereosentry.camera_model import CameraIntrinsics, Pose, project_points
from stereosentry.rotations import rot_x, rot_y, rot_z

# 9x6 board with 30 mm squares, the default target throughout the suite
BOARD_GRID = np.column_stack(
    [g.ravel() for g in np.meshgrid(np.arange(9) * 0.03, np.arange(6) * 0.03)]
)

# view poses chosen to keep the full board inside a 640x480 frame and the
# absolute-conic system well conditioned (varied tilt about both axes)
VIEW_SPECS = [
    (5, 10, 2, (-0.12, -0.08, 0.55)),
    (-15, 20, -4, (-0.10, -0.10, 0.60)),
    (20, -15, 6, (-0.14, -0.05, 0.50)),
    (-10, -25, -8, (-0.08, -0.09, 0.65)),
    (25, 5, 3, (-0.13, -0.07, 0.58)),
    (-5, 15, 10, (-0.11, -0.06, 0.52)),
]


def board_views(intr, specs=VIEW_SPECS, jitter=0.0, seed=0):
    """Project the standard board through `intr` for each (rx, ry, rz, t)
    spec. Returns (correspondence_sets, true_poses)."""
    rng = np.random.default_rng(seed)
    board3 = np.column_stack([BOARD_GRID, np.zeros(len(BOARD_GRID))])
    views, poses = [], []
    for i, (rx, ry, rz, t) in enumerate(specs):
        pose = Pose(rot_x(rx) @ rot_y(ry) @ rot_z(rz), np.asarray(t, float))
        uv = project_points(pose.apply(board3), intr)
        assert np.all(np.isfinite(uv)), "view spec leaves the frame"
        if jitter:
            uv = uv + rng.normal(0.0, jitter, uv.shape)
        views.append(CorrespondenceSet(f"view-{i}", BOARD_GRID, uv))
        poses.append(pose)
    return views, poses


@pytest.fixture
def truth_intrinsics():
    return CameraIntrinsics(
        fx=554.2563, fy=554.2563, cx=322.1, cy=238.7, k1=-0.20, k2=0.05
    )


@pytest.fixture
def truth_views(truth_intrinsics):
    return board_views(truth_intrinsics)
