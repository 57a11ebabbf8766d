import math

import pytest

from stereosentry.camera_model import default_intrinsics
from stereosentry.control import (
    AUTO_TRACK,
    ControlMode,
    HeadPose,
    TrackerState,
    auto_track,
    head_to_gimbal,
    select_target,
    track_step,
)
from stereosentry.detect import Detection, LabelVocabulary


def det(label, cu, cv, conf, half=20.0):
    return Detection(label=label, confidence=conf,
                     bbox=(cu - half, cv - half, cu + half, cv + half))


def test_head_pose_passthrough_and_clip():
    assert head_to_gimbal(HeadPose(10.0, -5.0, 2.0, seq=1)) == (10.0, -5.0, 2.0)
    assert head_to_gimbal(HeadPose(200.0, 0.0, 0.0, seq=2)) == (90.0, 0.0, 0.0)
    assert head_to_gimbal(HeadPose(0.0, 0.0, 0.0, seq=3)) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        HeadPose(math.nan, 0.0, 0.0, seq=4)


def test_mode_validation():
    assert ControlMode().kind == "vr_head"
    assert auto_track("person").target_label == "person"
    assert auto_track("person", LabelVocabulary()).kind == AUTO_TRACK
    with pytest.raises(ValueError):
        auto_track("unicorn", LabelVocabulary())
    with pytest.raises(ValueError):
        ControlMode(kind=AUTO_TRACK)
    with pytest.raises(ValueError):
        ControlMode(kind="vr_head", target_label="person")


def test_tracker_state_validation():
    with pytest.raises(ValueError):
        TrackerState(kp=0.0)
    with pytest.raises(ValueError):
        TrackerState(kp=1.5)
    with pytest.raises(ValueError):
        TrackerState(deadband_deg=-1.0)


def test_select_highest_confidence_without_lock():
    dets = [det("person", 100, 100, 0.6), det("person", 400, 300, 0.9),
            det("dog", 320, 240, 0.99)]
    pick = select_target(dets, "person", TrackerState())
    assert pick.center == (400.0, 300.0)
    assert select_target(dets, "cat", TrackerState()) is None


def test_select_sticky_nearest_with_lock():
    prev = TrackerState(locked=det("person", 300, 240, 0.8))
    dets = [det("person", 310, 240, 0.5), det("person", 100, 240, 0.99)]
    pick = select_target(dets, "person", prev)
    assert pick.center == (310.0, 240.0)


def test_select_tie_breaks():
    small_left = Detection(label="person", confidence=0.7, bbox=(0, 0, 10, 10))
    big_right = Detection(label="person", confidence=0.7, bbox=(100, 100, 140, 140))
    pick = select_target([small_left, big_right], "person", TrackerState())
    assert pick is big_right  # equal confidence, larger area wins
    twin_a = Detection(label="person", confidence=0.7, bbox=(0, 0, 10, 10))
    twin_b = Detection(label="person", confidence=0.7, bbox=(50, 0, 60, 10))
    assert select_target([twin_b, twin_a], "person", TrackerState()) == twin_a


def test_track_step_deadband_holds():
    intr = default_intrinsics()
    targets, ts = track_step(TrackerState(), det("person", 320, 240, 1.0),
                             intr, (4.0, -2.0, 0.0))
    assert targets == (4.0, -2.0, 0.0)
    assert ts.locked.center == (320.0, 240.0)
    assert ts.frames_since_seen == 0


def test_track_step_proportional_on_angular_error():
    intr = default_intrinsics()
    chosen = det("person", 417.7, 240.0, 1.0)
    targets, _ = track_step(TrackerState(), chosen, intr, (0.0, 0.0, 0.0))
    err = math.degrees(math.atan((417.7 - intr.cx) / intr.fx))
    assert err == pytest.approx(10.0, abs=0.05)
    assert targets[0] == pytest.approx(0.5 * err, abs=1e-12)
    assert targets[0] == pytest.approx(5.0, abs=0.05)
    assert targets[1] == 0.0 or abs(targets[1]) < 1e-12
    assert targets[2] == 0.0


def test_track_step_pitch_sign():
    intr = default_intrinsics()
    # object below center (v > cy) needs the view to pitch down
    low = det("person", 320.0, 340.0, 1.0)
    targets, _ = track_step(TrackerState(), low, intr, (0.0, 0.0, 0.0))
    assert targets[1] < 0.0
    high = det("person", 320.0, 140.0, 1.0)
    targets, _ = track_step(TrackerState(), high, intr, (0.0, 0.0, 0.0))
    assert targets[1] > 0.0


def test_track_step_clips_to_limits():
    intr = default_intrinsics()
    chosen = det("person", 639.0, 240.0, 1.0)
    targets, _ = track_step(TrackerState(), chosen, intr, (89.0, 0.0, 0.0))
    assert targets[0] == 90.0


def test_track_step_loss_holds_then_recenters():
    intr = default_intrinsics()
    ts = TrackerState(locked=det("person", 500, 240, 0.9))
    current = (30.0, 10.0, 0.0)
    for frame in range(29):
        targets, ts = track_step(ts, None, intr, current)
        assert targets is None
        assert ts.frames_since_seen == frame + 1
        assert ts.locked is not None
    targets, ts = track_step(ts, None, intr, current)
    assert targets == (0.0, 0.0, 0.0)
    assert ts.locked is None
    # stays re-centered while nothing is seen
    targets, ts = track_step(ts, None, intr, current)
    assert targets == (0.0, 0.0, 0.0)


def test_track_step_reacquisition_resets_counter():
    intr = default_intrinsics()
    ts = TrackerState(locked=det("person", 500, 240, 0.9), frames_since_seen=12)
    targets, ts = track_step(ts, det("person", 330, 240, 0.8), intr, (0, 0, 0))
    assert ts.frames_since_seen == 0
    assert targets is not None


def test_static_target_in_deadband_is_chatter_free():
    intr = default_intrinsics()
    ts = TrackerState()
    current = (7.0, -3.0, 0.0)
    seen = set()
    for _ in range(50):
        targets, ts = track_step(ts, det("person", 324.0, 243.0, 0.9),
                                 intr, current)
        seen.add(targets)
    assert seen == {current[:2] + (0.0,)}
