"""Latency benchmark: the full stack plus an in-process loopback client.

Keeping the client in-process pins both ends to one monotonic clock, so
glass-to-glass numbers mean exactly "render started -> decoded pixels in
the client's hands" with no cross-host clock games. Network variance is
deliberately out of scope; this measures the software.
"""

import http.client
import json
import threading
import time

import numpy as np

from .imgio import decode_jpeg
from .runtime import Runtime
from .service import SentryService
from .simworld import default_scene

TELEMETRY_HZ = 30.0


def _pct(samples, q):
    if not samples:
        return None
    return round(float(np.percentile(np.asarray(samples), q)), 1)


def _read_part(resp):
    line = resp.readline()
    if not line:
        return None
    if line.strip() == b"":
        line = resp.readline()
    if not line.startswith(b"--"):
        return None
    headers = {}
    while True:
        line = resp.readline()
        if not line or line == b"\r\n":
            break
        key, _, value = line.rstrip(b"\r\n").partition(b": ")
        headers[key.decode()] = value.decode()
    payload = resp.read(int(headers.get("Content-Length", 0)))
    resp.read(2)  # part-terminating CRLF
    return headers, payload


def run_benchmark(config, duration_s=10.0, scene=None, rig=None):
    """Run the stack for duration_s and return the metric document."""
    scene = scene if scene is not None else default_scene()
    runtime = Runtime(config, scene, rig=rig)
    glass_ms = []
    rtt_ms = []
    stop = threading.Event()

    def stream_client(port):
        conn = http.client.HTTPConnection("127.0.0.1", port, timeout=5.0)
        try:
            conn.request("GET", "/stream")
            resp = conn.getresponse()
            while not stop.is_set():
                part = _read_part(resp)
                if part is None:
                    return
                headers, payload = part
                decode_jpeg(payload)  # display stands in as a decode
                now_ms = time.monotonic() * 1000.0
                glass_ms.append(now_ms - int(headers["X-Capture-Ms"]))
        except OSError:
            return
        finally:
            conn.close()

    def telemetry_client(port):
        conn = http.client.HTTPConnection("127.0.0.1", port, timeout=5.0)
        period = 1.0 / TELEMETRY_HZ
        seq = 0
        next_t = time.monotonic()
        try:
            while not stop.is_set():
                seq += 1
                body = json.dumps({
                    "yaw": 2.0 * np.sin(seq / 20.0), "pitch": 0.0, "roll": 0.0,
                    "seq": seq, "t_ms": int(time.monotonic() * 1000),
                }).encode()
                t0 = time.monotonic()
                conn.request("POST", "/telemetry", body=body,
                             headers={"Content-Type": "application/json"})
                resp = conn.getresponse()
                resp.read()
                rtt_ms.append((time.monotonic() - t0) * 1000.0)
                if resp.status not in (204, 409):
                    return
                next_t += period
                delay = next_t - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
        except OSError:
            return
        finally:
            conn.close()

    t_start = time.monotonic()
    with runtime, SentryService(runtime, port=0) as svc:
        threads = [
            threading.Thread(target=stream_client, args=(svc.port,), daemon=True),
            threading.Thread(target=telemetry_client, args=(svc.port,), daemon=True),
        ]
        for t in threads:
            t.start()
        time.sleep(duration_s)
        stop.set()
        elapsed = time.monotonic() - t_start
        frames = runtime.seq
        pipeline = list(runtime._pipeline_ms)
        for t in threads:
            t.join(timeout=5.0)

    return {
        "fps": round(frames / elapsed, 2),
        "pipeline_ms": {"p50": _pct(pipeline, 50), "p95": _pct(pipeline, 95)},
        "glass_to_glass_ms": {"p50": _pct(glass_ms, 50),
                              "p95": _pct(glass_ms, 95)},
        "telemetry_rtt_ms": {"p50": _pct(rtt_ms, 50), "p95": _pct(rtt_ms, 95)},
    }
