"""Latest-wins plumbing between the pipeline, control loop, and clients.

Two primitives cover every cross-thread handoff in the stack:

* Mailbox: a single slot where a new value silently replaces an unread
  one. Head poses and mode switches want exactly this; acting on stale
  input is worse than dropping it.
* FrameBus: one shared latest-frame slot with per-subscriber cursors.
  A slow client skips frames and never sees a sequence number twice,
  and memory stays bounded by one frame plus whatever subscribers are
  still holding.
"""

import threading
from dataclasses import dataclass, field


class Mailbox:
    """Single-slot handoff; `put` overwrites, `take` empties."""

    def __init__(self):
        self._lock = threading.Lock()
        self._value = None
        self._full = False

    def put(self, value):
        with self._lock:
            self._value = value
            self._full = True

    def take(self):
        """Return the pending value and clear the slot, or None."""
        with self._lock:
            if not self._full:
                return None
            value = self._value
            self._value = None
            self._full = False
            return value

    def peek(self):
        with self._lock:
            return self._value if self._full else None


@dataclass(frozen=True)
class ComposedFrame:
    """One stereo frame ready for the wire: side-by-side pixels plus the
    JPEG encoding and the state snapshots that belong to this instant."""

    image: object            # (h, 2w, 3) uint8, left|right
    jpeg: bytes
    seq: int
    capture_time_ms: int     # server monotonic clock
    gimbal: tuple = (0.0, 0.0, 0.0)
    mode: object = None
    detections: tuple = field(default_factory=tuple)


class BusClosed(Exception):
    """The producer shut down; subscribers should stop reading."""


class FrameBus:
    """Broadcast of the most recent frame to any number of subscribers."""

    def __init__(self):
        self._cond = threading.Condition()
        self._latest = None
        self._closed = False

    def publish(self, frame: ComposedFrame):
        with self._cond:
            if self._closed:
                raise BusClosed("bus is closed")
            if self._latest is not None and frame.seq <= self._latest.seq:
                raise ValueError("seq must increase monotonically")
            self._latest = frame
            self._cond.notify_all()

    def latest(self):
        with self._cond:
            return self._latest

    def close(self):
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def subscribe(self):
        return _Subscription(self)


class _Subscription:
    """Cursor over the bus: yields each frame at most once, newest first
    when behind."""

    def __init__(self, bus):
        self._bus = bus
        self._last_seq = -1

    def next(self, timeout=None):
        """Block until a frame newer than the last one returned exists.

        Returns None on timeout. Raises BusClosed once the bus shuts
        down and no newer frame remains.
        """
        bus = self._bus
        with bus._cond:
            while True:
                frame = bus._latest
                if frame is not None and frame.seq > self._last_seq:
                    self._last_seq = frame.seq
                    return frame
                if bus._closed:
                    raise BusClosed("bus is closed")
                if not bus._cond.wait(timeout):
                    return None
