import http.client
import json

import numpy as np
import pytest

from stereosentry.bus import ComposedFrame, FrameBus
from stereosentry.control import ControlMode
from stereosentry.detect import LabelVocabulary
from stereosentry.service import (
    SentryService,
    compose_frame,
    format_status_body,
    format_stream_part,
)


class StubBackend:
    def __init__(self):
        self.bus = FrameBus()
        self.vocabulary = LabelVocabulary()
        self.poses = []
        self.modes = []
        self.last_seq = -1
        self.doc = {
            "seq": 41, "mode": "vr", "target": None,
            "gimbal": {"yaw": 1.5, "pitch": 0.0, "roll": 0.0},
            "zoom": 1.0, "fps_1s": 15,
            "latency_ms_p50_p95": {"p50": 21.0, "p95": 38.5},
            "detections": [],
        }

    def submit_telemetry(self, pose):
        if pose.seq <= self.last_seq:
            return False
        self.last_seq = pose.seq
        self.poses.append(pose)
        return True

    def request_mode(self, mode, zoom=None):
        self.modes.append((mode, zoom))

    def status_document(self):
        return self.doc


@pytest.fixture()
def served():
    backend = StubBackend()
    with SentryService(backend, port=0) as svc:
        conn = http.client.HTTPConnection("127.0.0.1", svc.port, timeout=5.0)
        yield backend, conn
        conn.close()


def _post(conn, path, body):
    payload = body if isinstance(body, bytes) else json.dumps(body).encode()
    conn.request("POST", path, body=payload,
                 headers={"Content-Type": "application/json"})
    resp = conn.getresponse()
    data = resp.read()
    return resp.status, data


# ---- pure functions ------------------------------------------------------

def test_compose_zoom_one_is_bit_exact_concat():
    rng = np.random.default_rng(0)
    left = rng.integers(0, 256, (480, 640, 3), dtype=np.uint8)
    right = rng.integers(0, 256, (480, 640, 3), dtype=np.uint8)
    out = compose_frame(left, right, 1.0)
    assert out.shape == (480, 1280, 3)
    assert np.array_equal(out[:, :640], left)
    assert np.array_equal(out[:, 640:], right)


def test_compose_zoom_crops_center_and_upscales():
    left = np.zeros((480, 640, 3), dtype=np.uint8)
    left[:, :] = (0, 0, 200)          # blue border
    left[90:390, 120:520] = (200, 0, 0)  # red fills the exact 1.6x crop
    out = compose_frame(left, left, 1.6)
    assert out.shape == (480, 1280, 3)
    # everything visible after the zoom came from the red region
    assert (out[..., 0] > 150).mean() > 0.99
    assert (out[..., 2] > 150).mean() < 0.01


def test_compose_zoom_caps_at_1_6():
    rng = np.random.default_rng(1)
    left = rng.integers(0, 256, (480, 640, 3), dtype=np.uint8)
    right = rng.integers(0, 256, (480, 640, 3), dtype=np.uint8)
    assert np.array_equal(compose_frame(left, right, 2.5),
                          compose_frame(left, right, 1.6))
    assert np.array_equal(compose_frame(left, right, 0.2),
                          compose_frame(left, right, 1.0))


def test_compose_rejects_mismatched_eyes():
    with pytest.raises(ValueError):
        compose_frame(np.zeros((480, 640, 3), np.uint8),
                      np.zeros((240, 320, 3), np.uint8))


def test_stream_part_golden_bytes():
    part = format_stream_part(b"JPEGDATA", seq=5, capture_ms=12345)
    assert part == (
        b"--frame\r\n"
        b"Content-Type: image/jpeg\r\n"
        b"Content-Length: 8\r\n"
        b"X-Seq: 5\r\n"
        b"X-Capture-Ms: 12345\r\n"
        b"\r\n"
        b"JPEGDATA\r\n"
    )


def test_status_body_golden_bytes():
    doc = {
        "seq": 41, "mode": "vr", "target": None,
        "gimbal": {"yaw": 1.5, "pitch": 0.0, "roll": 0.0},
        "zoom": 1.0, "fps_1s": 15,
        "latency_ms_p50_p95": {"p50": 21.0, "p95": 38.5},
        "detections": [],
    }
    assert format_status_body(doc) == (
        b'{"detections":[],"fps_1s":15,"gimbal":{"pitch":0.0,"roll":0.0,'
        b'"yaw":1.5},"latency_ms_p50_p95":{"p50":21.0,"p95":38.5},'
        b'"mode":"vr","seq":41,"target":null,"zoom":1.0}'
    )


# ---- endpoints -----------------------------------------------------------

def test_health_and_status(served):
    backend, conn = served
    conn.request("GET", "/health")
    resp = conn.getresponse()
    assert resp.status == 200 and resp.read() == b"ok"

    conn.request("GET", "/status")
    resp = conn.getresponse()
    assert resp.status == 200
    assert resp.getheader("Content-Type") == "application/json"
    assert json.loads(resp.read()) == backend.doc


def test_telemetry_accept_stale_and_malformed(served):
    backend, conn = served
    body = {"yaw": 10, "pitch": -5, "roll": 0, "seq": 3, "t_ms": 77}
    assert _post(conn, "/telemetry", body)[0] == 204
    assert backend.poses[-1].yaw == 10.0
    assert backend.poses[-1].client_time_ms == 77

    status, data = _post(conn, "/telemetry", body)  # same seq again
    assert status == 409
    assert json.loads(data)["error"] == "stale seq"

    assert _post(conn, "/telemetry", {"yaw": "x", "pitch": 0, "roll": 0,
                                      "seq": 4})[0] == 400
    assert _post(conn, "/telemetry", b"{not json")[0] == 400
    assert _post(conn, "/telemetry",
                 b'{"yaw": NaN, "pitch": 0, "roll": 0, "seq": 5}')[0] == 400
    assert _post(conn, "/telemetry", {"pitch": 0, "roll": 0, "seq": 6})[0] == 400


def test_mode_endpoint(served):
    backend, conn = served
    assert _post(conn, "/mode", {"mode": "track", "target": "person"})[0] == 204
    mode, zoom = backend.modes[-1]
    assert mode.target_label == "person" and zoom is None

    assert _post(conn, "/mode", {"mode": "vr", "zoom": 1.4})[0] == 204
    mode, zoom = backend.modes[-1]
    assert mode == ControlMode() and zoom == 1.4

    assert _post(conn, "/mode", {"mode": "track"})[0] == 400
    assert _post(conn, "/mode", {"mode": "warp"})[0] == 400
    assert _post(conn, "/mode", {"mode": "track", "target": "unicorn"})[0] == 400
    assert len(backend.modes) == 2


def test_unknown_routes(served):
    _, conn = served
    conn.request("GET", "/nope")
    resp = conn.getresponse()
    assert resp.status == 404
    resp.read()
    assert _post(conn, "/nope", {})[0] == 404


def read_part(fp):
    """Parse one multipart part per the boundary grammar; returns
    (headers, payload)."""
    line = fp.readline()
    assert line == b"--frame\r\n", line
    headers = {}
    while True:
        line = fp.readline()
        if line == b"\r\n":
            break
        key, _, value = line.rstrip(b"\r\n").partition(b": ")
        headers[key.decode()] = value.decode()
    n = int(headers["Content-Length"])
    payload = fp.read(n)
    assert fp.read(2) == b"\r\n"
    return headers, payload


def test_stream_parts_conform_and_seq_increases(served):
    backend, conn = served
    backend.bus.publish(ComposedFrame(image=None, jpeg=b"AA", seq=0,
                                      capture_time_ms=100))
    conn.request("GET", "/stream")
    resp = conn.getresponse()
    assert resp.status == 200
    ctype = resp.getheader("Content-Type")
    assert ctype == "multipart/x-mixed-replace; boundary=frame"

    headers, payload = read_part(resp)
    assert headers["Content-Type"] == "image/jpeg"
    assert headers["X-Seq"] == "0"
    assert headers["X-Capture-Ms"] == "100"
    assert payload == b"AA"

    backend.bus.publish(ComposedFrame(image=None, jpeg=b"BBB", seq=4,
                                      capture_time_ms=340))
    headers, payload = read_part(resp)
    assert headers["X-Seq"] == "4"  # strictly increased
    assert payload == b"BBB"
    backend.bus.close()


def test_static_serving_and_traversal_guard(tmp_path):
    (tmp_path / "index.html").write_bytes(b"<html>console</html>")
    (tmp_path / "app.js").write_bytes(b"let x = 1;")
    secret = tmp_path.parent / "secret.txt"
    secret.write_bytes(b"nope")

    backend = StubBackend()
    with SentryService(backend, port=0, static_dir=tmp_path) as svc:
        conn = http.client.HTTPConnection("127.0.0.1", svc.port, timeout=5.0)
        conn.request("GET", "/")
        resp = conn.getresponse()
        assert resp.status == 200 and resp.read() == b"<html>console</html>"
        assert resp.getheader("Content-Type").startswith("text/html")

        conn.request("GET", "/app.js")
        resp = conn.getresponse()
        assert resp.status == 200 and resp.read() == b"let x = 1;"

        conn.request("GET", "/../secret.txt")
        resp = conn.getresponse()
        assert resp.status == 404
        resp.read()

        conn.request("GET", "/missing.css")
        resp = conn.getresponse()
        assert resp.status == 404
        resp.read()
        conn.close()
