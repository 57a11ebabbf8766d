"""HTTP control plane: MJPEG stereo streaming, telemetry, mode, status.

The server owns no pipeline state. Every handler talks to a backend object
(the runtime) through four calls: the frame bus, submit_telemetry,
request_mode, and status_document. Handlers run on their own threads and
must never block the pipeline tick; all they share with it are
latest-wins slots.
"""

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
from PIL import Image

from .bus import BusClosed
from .control import AUTO_TRACK, ControlMode, HeadPose, auto_track

DEFAULT_PORT = 8080
DEFAULT_JPEG_QUALITY = 80
MAX_ZOOM = 1.6
STREAM_BOUNDARY = b"frame"
_MAX_BODY = 1 << 20


def _pixels(img):
    px = img.pixels if hasattr(img, "pixels") else np.asarray(img)
    if px.ndim != 3 or px.shape[2] != 3:
        raise ValueError("composition needs RGB images")
    return px


def compose_frame(left, right, zoom=1.0):
    """Side-by-side stereo frame with centered digital zoom.

    Zoom is clipped to [1.0, 1.6]; at exactly 1.0 the eyes are
    concatenated untouched so the no-zoom path stays bit-exact.
    """
    lp, rp = _pixels(left), _pixels(right)
    if lp.shape != rp.shape:
        raise ValueError(f"eye sizes differ: {lp.shape} vs {rp.shape}")
    zoom = min(max(float(zoom), 1.0), MAX_ZOOM)
    if zoom == 1.0:
        return np.concatenate([lp, rp], axis=1)

    h, w = lp.shape[:2]
    cw, ch = int(round(w / zoom)), int(round(h / zoom))
    x0, y0 = (w - cw) // 2, (h - ch) // 2

    def eye(px):
        crop = px[y0:y0 + ch, x0:x0 + cw]
        return np.asarray(
            Image.fromarray(crop).resize((w, h), Image.BILINEAR))

    return np.concatenate([eye(lp), eye(rp)], axis=1)


def format_stream_part(jpeg: bytes, seq: int, capture_ms: int) -> bytes:
    """One multipart/x-mixed-replace part, exactly as it leaves the wire."""
    header = (
        b"--" + STREAM_BOUNDARY + b"\r\n"
        b"Content-Type: image/jpeg\r\n"
        + f"Content-Length: {len(jpeg)}\r\n".encode("ascii")
        + f"X-Seq: {seq}\r\n".encode("ascii")
        + f"X-Capture-Ms: {capture_ms}\r\n".encode("ascii")
        + b"\r\n"
    )
    return header + jpeg + b"\r\n"


def format_status_body(doc: dict) -> bytes:
    """Canonical status serialization (sorted keys, no whitespace) so the
    body is reproducible byte-for-byte for a given document."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("ascii")


def _mode_from_wire(body, vocabulary):
    wire = body.get("mode")
    if wire == "vr":
        return ControlMode()
    if wire == "track":
        target = body.get("target")
        if not isinstance(target, str) or not target:
            raise ValueError("track mode needs a target label")
        return auto_track(target, vocabulary)
    raise ValueError(f"unknown mode {wire!r}")


def mode_to_wire(mode: ControlMode):
    if mode.kind == AUTO_TRACK:
        return "track", mode.target_label
    return "vr", None


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "stereosentry"

    # ---- helpers -------------------------------------------------------

    def log_message(self, fmt, *args):
        pass  # endpoint chatter would drown the console

    @property
    def ctx(self):
        return self.server.ctx

    def _send_json(self, code, doc):
        body = format_status_body(doc)
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_empty(self, code):
        self.send_response(code)
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _read_json_body(self):
        length = int(self.headers.get("Content-Length", 0))
        if not 0 < length <= _MAX_BODY:
            raise ValueError("missing or oversized body")
        body = json.loads(self.rfile.read(length))
        if not isinstance(body, dict):
            raise ValueError("body must be a JSON object")
        return body

    # ---- endpoints -----------------------------------------------------

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        if path == "/health":
            body = b"ok"
            self.send_response(200)
            self.send_header("Content-Type", "text/plain")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
        elif path == "/status":
            self._send_json(200, self.ctx.backend.status_document())
        elif path == "/stream":
            self._stream()
        else:
            self._static(path)

    def _stream(self):
        self.send_response(200)
        self.send_header(
            "Content-Type",
            "multipart/x-mixed-replace; boundary="
            + STREAM_BOUNDARY.decode("ascii"),
        )
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        sub = self.ctx.backend.bus.subscribe()
        try:
            while True:
                try:
                    frame = sub.next(timeout=0.5)
                except BusClosed:
                    return
                if frame is None:
                    continue
                self.wfile.write(format_stream_part(
                    frame.jpeg, frame.seq, frame.capture_time_ms))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            return  # client went away; nothing to clean up but the socket

    def _static(self, path):
        root = self.ctx.static_dir
        if root is None:
            self._send_json(404, {"error": "not found"})
            return
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        try:
            inside = target.is_relative_to(root.resolve())
        except AttributeError:  # pragma: no cover - python < 3.9
            inside = str(target).startswith(str(root.resolve()))
        if not inside or not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        data = target.read_bytes()
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):
        path = self.path.split("?", 1)[0]
        try:
            body = self._read_json_body()
        except (ValueError, json.JSONDecodeError) as exc:
            self._send_json(400, {"error": f"malformed body: {exc}"})
            return
        if path == "/telemetry":
            self._telemetry(body)
        elif path == "/mode":
            self._mode(body)
        else:
            self._send_json(404, {"error": "not found"})

    def _telemetry(self, body):
        try:
            pose = HeadPose(
                yaw=float(body["yaw"]),
                pitch=float(body["pitch"]),
                roll=float(body["roll"]),
                seq=int(body["seq"]),
                client_time_ms=int(body.get("t_ms", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            self._send_json(400, {"error": f"bad telemetry: {exc}"})
            return
        if self.ctx.backend.submit_telemetry(pose):
            self._send_empty(204)
        else:
            self._send_json(409, {"error": "stale seq"})

    def _mode(self, body):
        try:
            mode = _mode_from_wire(body, self.ctx.backend.vocabulary)
            zoom = body.get("zoom")
            if zoom is not None:
                zoom = float(zoom)
                if not np.isfinite(zoom):
                    raise ValueError("zoom must be finite")
        except (TypeError, ValueError) as exc:
            self._send_json(400, {"error": str(exc)})
            return
        self.ctx.backend.request_mode(mode, zoom)
        self._send_empty(204)


class _Context:
    def __init__(self, backend, static_dir):
        self.backend = backend
        self.static_dir = Path(static_dir) if static_dir else None


class SentryService:
    """Threaded HTTP server bound to a backend. Start, use, close."""

    def __init__(self, backend, host="127.0.0.1", port=DEFAULT_PORT,
                 static_dir=None):
        self._server = ThreadingHTTPServer((host, port), _Handler)
        self._server.daemon_threads = True
        self._server.ctx = _Context(backend, static_dir)
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.1},
            daemon=True)

    @property
    def port(self):
        return self._server.server_address[1]

    @property
    def url(self):
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self):
        self._thread.start()
        return self

    def close(self):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5.0)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.close()
