"""Three-axis gimbal head: slew-limited motion and the serial command codec.

The head holds ±90° per axis and slews at up to 300 °/s (60° in 0.2 s),
advanced on a fixed 20 ms control tick. Commands travel as one ASCII line
each, so a microcontroller bridge can parse them with a byte loop; the
same lines are mirrored on a local TCP port for external subscribers.
"""

import math
import re
import socket
import threading
from dataclasses import dataclass, field, replace

DEFAULT_LIMIT_DEG = 90.0
DEFAULT_MAX_RATE_DEG_S = 300.0  # 60 degrees per 0.2 s
DEFAULT_TICK_S = 0.020
DEFAULT_COMMAND_PORT = 8600


class InvalidCommandError(ValueError):
    """Command rejected before it could touch the state."""


class CommandParseError(ValueError):
    """Malformed serial line. `offset` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


def _clip(value, limit):
    return -limit if value < -limit else (limit if value > limit else value)


@dataclass(frozen=True)
class GimbalState:
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    target_yaw: float = 0.0
    target_pitch: float = 0.0
    target_roll: float = 0.0
    limit_deg: float = DEFAULT_LIMIT_DEG
    max_rate_deg_s: float = DEFAULT_MAX_RATE_DEG_S
    tick_s: float = DEFAULT_TICK_S

    def __post_init__(self):
        if self.limit_deg <= 0 or self.max_rate_deg_s <= 0 or self.tick_s <= 0:
            raise ValueError("limit, rate and tick must be positive")
        for name in ("yaw", "pitch", "roll",
                     "target_yaw", "target_pitch", "target_roll"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            if abs(v) > self.limit_deg + 1e-9:
                raise ValueError(f"{name}={v} exceeds ±{self.limit_deg}")

    @property
    def angles(self):
        return (self.yaw, self.pitch, self.roll)

    @property
    def at_target(self):
        return (self.yaw == self.target_yaw
                and self.pitch == self.target_pitch
                and self.roll == self.target_roll)


def set_target(state: GimbalState, yaw, pitch, roll) -> GimbalState:
    """Replace the targets (latest wins); current angles stay put.

    Inputs are clipped to the axis limit. Non-finite input is refused
    outright rather than clipped, since NaN would poison every later tick.
    """
    angles = (float(yaw), float(pitch), float(roll))
    if not all(math.isfinite(a) for a in angles):
        raise InvalidCommandError(f"non-finite target {angles}")
    y, p, r = (_clip(a, state.limit_deg) for a in angles)
    return replace(state, target_yaw=y, target_pitch=p, target_roll=r)


def tick(state: GimbalState, dt=None) -> GimbalState:
    """Advance every axis toward its target by at most max_rate·dt.

    Arrival is exact: once the remaining error fits in one step the axis
    lands on the target, never past it, making the target a fixed point.
    """
    if dt is None:
        dt = state.tick_s
    if not (dt > 0):
        raise ValueError("dt must be positive")
    step = state.max_rate_deg_s * dt

    def move(current, target):
        err = target - current
        if abs(err) <= step:
            return target
        return current + (step if err > 0 else -step)

    return replace(
        state,
        yaw=move(state.yaw, state.target_yaw),
        pitch=move(state.pitch, state.target_pitch),
        roll=move(state.roll, state.target_roll),
    )


@dataclass(frozen=True)
class ServoCommand:
    """One head pose on the wire. Angles carry one decimal of precision;
    `clipped` records that a parser had to pull a value back in range."""

    seq: int
    yaw: float
    pitch: float
    roll: float
    clipped: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.seq < 0:
            raise ValueError("seq must be non-negative")
        for v in (self.yaw, self.pitch, self.roll):
            if not math.isfinite(v):
                raise ValueError("command angles must be finite")


def encode_command(cmd: ServoCommand, limit=DEFAULT_LIMIT_DEG) -> bytes:
    """`G <seq> Y<yaw> P<pitch> R<roll>\\n`, one decimal, clipped to ±limit."""
    y = _clip(cmd.yaw, limit)
    p = _clip(cmd.pitch, limit)
    r = _clip(cmd.roll, limit)
    return f"G {cmd.seq} Y{y:.1f} P{p:.1f} R{r:.1f}\n".encode("ascii")


_FIELD = rb"-?\d+(?:\.\d+)?"
_TOKENS = (
    (b"G ", b"literal `G `"),
    (rb"\d+", b"sequence number"),
    (b" Y", b"literal ` Y`"),
    (_FIELD, b"yaw value"),
    (b" P", b"literal ` P`"),
    (_FIELD, b"pitch value"),
    (b" R", b"literal ` R`"),
    (_FIELD, b"roll value"),
    (rb"\r?\n", b"line terminator"),
)


def parse_command(line: bytes, limit=DEFAULT_LIMIT_DEG) -> ServoCommand:
    """Parse one serial line; tolerant of a trailing CR.

    Raises CommandParseError carrying the byte offset of the first
    violation. Out-of-range angles are not an error: they are clipped
    and flagged, mirroring what the servo hardware would do.
    """
    if isinstance(line, str):
        line = line.encode("ascii", errors="replace")
    pos = 0
    captured = []
    for pattern, what in _TOKENS:
        m = re.compile(pattern).match(line, pos)
        if m is None:
            raise CommandParseError(f"expected {what.decode()}", pos)
        if pattern in (rb"\d+", _FIELD):
            captured.append(m.group())
        pos = m.end()
    if pos != len(line):
        raise CommandParseError("trailing bytes after command", pos)

    seq = int(captured[0])
    yaw, pitch, roll = (float(c) for c in captured[1:])
    clipped = any(abs(a) > limit for a in (yaw, pitch, roll))
    return ServoCommand(
        seq=seq,
        yaw=_clip(yaw, limit),
        pitch=_clip(pitch, limit),
        roll=_clip(roll, limit),
        clipped=clipped,
    )


class CommandBroadcaster:
    """Mirrors every published command to TCP subscribers, one line each.

    A physical servo bridge can connect and replay the stream onto real
    hardware. Subscribers that stop reading are dropped, never waited on.
    """

    def __init__(self, host="127.0.0.1", port=DEFAULT_COMMAND_PORT):
        self._server = socket.create_server((host, port))
        self._server.settimeout(0.2)
        self._lock = threading.Lock()
        self._clients = []
        self._running = True
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()

    @property
    def port(self):
        return self._server.getsockname()[1]

    def _accept_loop(self):
        while self._running:
            try:
                conn, _ = self._server.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            conn.setblocking(False)
            with self._lock:
                self._clients.append(conn)

    def publish(self, cmd: ServoCommand):
        line = encode_command(cmd)
        with self._lock:
            alive = []
            for conn in self._clients:
                try:
                    conn.sendall(line)
                    alive.append(conn)
                except OSError:
                    conn.close()
            self._clients = alive

    def close(self):
        self._running = False
        try:
            self._server.close()
        except OSError:
            pass
        self._thread.join(timeout=2.0)
        with self._lock:
            for conn in self._clients:
                conn.close()
            self._clients = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
