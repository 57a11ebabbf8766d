"""The live stack: render, detect, depth, control, all feeding the bus.

Three loops with very different rates share nothing but immutable
snapshots and latest-wins slots:

* render loop (configured fps): steps the scene, renders the stereo
  pair, runs the detector, composes and JPEG-encodes the wire frame.
* control loop (50 Hz): routes head poses or tracking corrections into
  gimbal targets and advances the servo model one slew step.
* depth worker (best effort): block-matches the newest pair it can get;
  its output annotates detections with metric distance.

Every loop is also callable as a plain method, so tests can drive the
whole stack deterministically without a single thread or clock.
"""

import threading
import time
from dataclasses import replace

import numpy as np

from .bus import ComposedFrame, FrameBus, Mailbox
from .calibration import compute_rectification
from .camera_model import default_rig
from .config import RunConfig
from .control import (
    AUTO_TRACK,
    VR_HEAD,
    ControlMode,
    TrackerState,
    head_to_gimbal,
    select_target,
    track_step,
)
from .detect import (
    BlobConfig,
    LabelVocabulary,
    OracleConfig,
    detect_blobs,
    detect_oracle,
)
from .gimbal import GimbalState, ServoCommand, set_target, tick
from .imgio import encode_jpeg
from .service import MAX_ZOOM, compose_frame, mode_to_wire
from .simworld import Scene, render_stereo, step_scene
from .stereo import (
    depth_from_disparity,
    match_disparity,
    rectify_image,
    region_distance,
)

CONTROL_HZ = 50.0
_STATS_WINDOW = 600


def _percentile(samples, q):
    if not samples:
        return None
    return round(float(np.percentile(np.asarray(samples), q)), 1)


class Runtime:
    """Owns all mutable pipeline state; see the module docstring."""

    def __init__(self, config: RunConfig, scene: Scene, rig=None,
                 broadcaster=None, clock=time.monotonic):
        self.config = config
        self.scene = scene
        self.rig = rig if rig is not None else default_rig()
        self.vocabulary = LabelVocabulary()
        self.bus = FrameBus()
        self.broadcaster = broadcaster
        self._clock = clock

        self.gimbal = GimbalState()
        self.mode = ControlMode()
        self.tracker = self._fresh_tracker()
        self.zoom = config.zoom
        self.detections = ()
        self.depth_map = None
        self.seq = 0
        self.sim_time = 0.0

        self.head_mail = Mailbox()
        self.mode_mail = Mailbox()
        self._depth_mail = Mailbox()
        self._telemetry_lock = threading.Lock()
        self._last_telemetry_seq = -1
        self._cmd_seq = 0

        self._frame_times = []
        self._pipeline_ms = []
        self._threads = []
        self._running = False

        self._rectify = self._plan_rectification()

    # ------------------------------------------------------------------
    # setup

    def _fresh_tracker(self):
        return TrackerState(
            kp=self.config.kp,
            deadband_deg=self.config.deadband_deg,
            loss_timeout_frames=self.config.loss_timeout_frames,
        )

    def _plan_rectification(self):
        """Skip the remap entirely when the rig is already row-aligned
        and distortion-free; the default synthetic rig is."""
        rig = self.rig
        aligned = (
            np.allclose(rig.relative_rotation, np.eye(3), atol=1e-12)
            and abs(rig.relative_translation[1]) < 1e-12
            and abs(rig.relative_translation[2]) < 1e-12
            and all(getattr(cam, k) == 0.0
                    for cam in (rig.left, rig.right)
                    for k in ("k1", "k2", "p1", "p2"))
        )
        if aligned:
            return None
        return compute_rectification(rig)

    # ------------------------------------------------------------------
    # service backend protocol

    def submit_telemetry(self, pose) -> bool:
        """Accept a head pose unless its seq is stale. The pose reaches
        the control loop only while the head drives the gimbal."""
        with self._telemetry_lock:
            if pose.seq <= self._last_telemetry_seq:
                return False
            self._last_telemetry_seq = pose.seq
        if self.mode.kind == VR_HEAD:
            self.head_mail.put(pose)
        return True

    def request_mode(self, mode: ControlMode, zoom=None):
        if zoom is not None:
            self.zoom = min(max(float(zoom), 1.0), MAX_ZOOM)
        self.mode_mail.put(mode)

    def status_document(self) -> dict:
        wire_mode, target = mode_to_wire(self.mode)
        g = self.gimbal
        now = self._clock()
        fps = sum(1 for t in self._frame_times[-120:] if now - t <= 1.0)
        return {
            "seq": self.seq - 1,
            "mode": wire_mode,
            "target": target,
            "gimbal": {
                "yaw": round(g.yaw, 2),
                "pitch": round(g.pitch, 2),
                "roll": round(g.roll, 2),
            },
            "zoom": round(self.zoom, 2),
            "fps_1s": fps,
            "latency_ms_p50_p95": {
                "p50": _percentile(self._pipeline_ms, 50),
                "p95": _percentile(self._pipeline_ms, 95),
            },
            "detections": [d.to_dict() for d in self.detections],
        }

    # ------------------------------------------------------------------
    # pipeline steps (all callable synchronously)

    def _detect(self, frame):
        if self.config.detector == "blob":
            return detect_blobs(frame.left, BlobConfig(**self.config.detector_cfg))
        cfg = OracleConfig(seed=self.config.seed, frame_index=self.seq,
                           width=frame.left.pixels.shape[1],
                           height=frame.left.pixels.shape[0],
                           **self.config.detector_cfg)
        return detect_oracle(frame.gt_detections, cfg)

    def render_frame(self) -> ComposedFrame:
        """Render, detect, compose, encode, publish. One wire frame."""
        t0 = self._clock()
        gimbal = self.gimbal
        frame = render_stereo(self.scene, self.rig, gimbal.angles, self.sim_time)

        detections = self._detect(frame)
        depth = self.depth_map
        if depth is not None:
            annotated = []
            for det in detections:
                dist = region_distance(depth, det.bbox)
                annotated.append(
                    replace(det, distance_m=dist if np.isfinite(dist) else None))
            detections = annotated

        composed = compose_frame(frame.left, frame.right, self.zoom)
        jpeg = encode_jpeg(composed, quality=self.config.jpeg_quality)
        t1 = self._clock()

        out = ComposedFrame(
            image=composed,
            jpeg=jpeg,
            seq=self.seq,
            capture_time_ms=int(t0 * 1000.0),
            gimbal=gimbal.angles,
            mode=self.mode,
            detections=tuple(detections),
        )
        self.bus.publish(out)
        self.detections = tuple(detections)
        if self.config.depth_enabled:
            self._depth_mail.put((frame.left, frame.right))

        self._pipeline_ms.append((t1 - t0) * 1000.0)
        del self._pipeline_ms[:-_STATS_WINDOW]
        self._frame_times.append(t1)
        del self._frame_times[:-_STATS_WINDOW]

        self.seq += 1
        dt = 1.0 / self.config.fps
        self.scene = step_scene(self.scene, dt)
        self.sim_time += dt
        return out

    def control_tick(self):
        """One 50 Hz step: apply inputs, update targets, slew the head."""
        pending = self.mode_mail.take()
        if pending is not None and pending != self.mode:
            self.mode = pending
            if pending.kind == AUTO_TRACK:
                self.tracker = self._fresh_tracker()

        if self.mode.kind == VR_HEAD:
            pose = self.head_mail.take()
            if pose is not None:
                self.gimbal = set_target(self.gimbal, *head_to_gimbal(pose))
        else:
            chosen = select_target(self.detections, self.mode.target_label,
                                   self.tracker)
            targets, self.tracker = track_step(
                self.tracker, chosen, self.rig.left, self.gimbal.angles)
            if targets is not None:
                self.gimbal = set_target(self.gimbal, *targets)

        self.gimbal = tick(self.gimbal)
        if self.broadcaster is not None:
            g = self.gimbal
            self.broadcaster.publish(ServoCommand(
                self._cmd_seq, g.target_yaw, g.target_pitch, g.target_roll))
            self._cmd_seq += 1

    def depth_step(self) -> bool:
        """Match the newest pending pair, if any. Returns True if one ran."""
        pair = self._depth_mail.take()
        if pair is None:
            return False
        left, right = pair
        if self._rectify is not None:
            maps = self._rectify
            left = rectify_image(left, maps.remap_left)
            right = rectify_image(right, maps.remap_right)
            focal = maps.new_intrinsics.fx
            baseline = maps.rectified_baseline
        else:
            focal = self.rig.left.fx
            baseline = self.rig.baseline
        disp = match_disparity(left, right)
        self.depth_map = depth_from_disparity(disp, focal, baseline)
        return True

    # ------------------------------------------------------------------
    # threaded operation

    def start(self):
        self._running = True
        self._threads = [
            threading.Thread(target=self._render_loop, daemon=True,
                             name="render"),
            threading.Thread(target=self._control_loop, daemon=True,
                             name="control"),
        ]
        if self.config.depth_enabled:
            self._threads.append(threading.Thread(
                target=self._depth_loop, daemon=True, name="depth"))
        for t in self._threads:
            t.start()
        return self

    def stop(self):
        self._running = False
        for t in self._threads:
            t.join(timeout=5.0)
        self._threads = []
        self.bus.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    def _paced(self, period, body):
        next_t = self._clock()
        while self._running:
            body()
            next_t += period
            now = self._clock()
            if next_t < now - 1.0:
                next_t = now  # fell far behind; do not burst to catch up
            delay = next_t - now
            if delay > 0:
                time.sleep(delay)

    def _render_loop(self):
        self._paced(1.0 / self.config.fps, self.render_frame)

    def _control_loop(self):
        self._paced(1.0 / CONTROL_HZ, self.control_tick)

    def _depth_loop(self):
        while self._running:
            if not self.depth_step():
                time.sleep(0.005)
