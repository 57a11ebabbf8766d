"""Mode logic: VR head passthrough versus autonomous target tracking.

Both paths emit gimbal targets on the 50 Hz control tick. Tracking uses a
proportional law on angular (not pixel) error so the gain means the same
thing at any focal length, with a deadband to stop chatter around center.
"""

import math
from dataclasses import dataclass, replace

from .detect import Detection, LabelVocabulary

DEFAULT_KP = 0.5
DEFAULT_DEADBAND_DEG = 1.0
DEFAULT_LOSS_TIMEOUT_FRAMES = 30  # 0.6 s at 50 Hz

VR_HEAD = "vr_head"
AUTO_TRACK = "auto_track"


@dataclass(frozen=True)
class HeadPose:
    yaw: float
    pitch: float
    roll: float
    seq: int
    client_time_ms: int = 0

    def __post_init__(self):
        for v in (self.yaw, self.pitch, self.roll):
            if not math.isfinite(v):
                raise ValueError("head pose angles must be finite")


@dataclass(frozen=True)
class ControlMode:
    kind: str = VR_HEAD
    target_label: str = None

    def __post_init__(self):
        if self.kind not in (VR_HEAD, AUTO_TRACK):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.kind == AUTO_TRACK and not self.target_label:
            raise ValueError("tracking mode needs a target label")
        if self.kind == VR_HEAD and self.target_label is not None:
            raise ValueError("head mode carries no target label")


def auto_track(label, vocabulary: LabelVocabulary = None) -> ControlMode:
    if vocabulary is not None and label not in vocabulary:
        raise ValueError(f"label {label!r} not in the vocabulary")
    return ControlMode(kind=AUTO_TRACK, target_label=label)


@dataclass(frozen=True)
class TrackerState:
    locked: Detection = None
    frames_since_seen: int = 0
    kp: float = DEFAULT_KP
    deadband_deg: float = DEFAULT_DEADBAND_DEG
    loss_timeout_frames: int = DEFAULT_LOSS_TIMEOUT_FRAMES

    def __post_init__(self):
        if not 0.0 < self.kp <= 1.0:
            raise ValueError("kp must lie in (0, 1]")
        if self.deadband_deg < 0:
            raise ValueError("deadband must be non-negative")
        if self.loss_timeout_frames < 1:
            raise ValueError("loss timeout must be at least one frame")


def head_to_gimbal(pose: HeadPose, limit=90.0):
    """Direct 1:1 head-to-servo mapping, clipped to the axis limit."""
    return (
        min(max(pose.yaw, -limit), limit),
        min(max(pose.pitch, -limit), limit),
        min(max(pose.roll, -limit), limit),
    )


def select_target(detections, wanted_label, prev: TrackerState):
    """Pick which detection to chase.

    With an existing lock the nearest bbox center wins (sticky association,
    so a confident stranger across the frame cannot steal the lock).
    Without one, highest confidence wins; ties fall to larger area, then
    the leftmost center.
    """
    candidates = [d for d in detections if d.label == wanted_label]
    if not candidates:
        return None
    if prev.locked is not None and prev.locked.label == wanted_label:
        pu, pv = prev.locked.center

        def key(d):
            du, dv = d.center[0] - pu, d.center[1] - pv
            return (du * du + dv * dv, -d.confidence, -d.area, d.center[0])
    else:
        def key(d):
            return (-d.confidence, -d.area, d.center[0])
    return min(candidates, key=key)


def track_step(ts: TrackerState, chosen, intr, current):
    """One tracking tick: angular error through the proportional gain.

    Returns (targets, ts'). targets is (yaw, pitch, roll) in degrees, or
    None when the tracker has nothing new to say (recently lost target,
    still inside the loss timeout) so the head keeps its last targets.
    """
    cur_yaw, cur_pitch, _ = current
    if chosen is None:
        frames = ts.frames_since_seen + 1
        if frames >= ts.loss_timeout_frames:
            return (0.0, 0.0, 0.0), replace(ts, locked=None,
                                            frames_since_seen=frames)
        return None, replace(ts, frames_since_seen=frames)

    cu, cv = chosen.center
    err_yaw = math.degrees(math.atan((cu - intr.cx) / intr.fx))
    err_pitch = -math.degrees(math.atan((cv - intr.cy) / intr.fy))

    def axis(current_angle, err):
        if abs(err) < ts.deadband_deg:
            return current_angle
        return min(max(current_angle + ts.kp * err, -90.0), 90.0)

    targets = (axis(cur_yaw, err_yaw), axis(cur_pitch, err_pitch), 0.0)
    return targets, replace(ts, locked=chosen, frames_since_seen=0)
