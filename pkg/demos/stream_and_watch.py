#!/usr/bin/env python3
"""Serve the live MJPEG stream and read it back with a bare HTTP client.

Starts the full runtime on an ephemeral port, pulls ten multipart frames,
prints their per-frame latency, and keeps the last JPEG as a snapshot.
"""

import http.client
import io
import json
import time
from pathlib import Path

from stereosentry.config import RunConfig
from stereosentry.runtime import Runtime
from stereosentry.service import SentryService
from stereosentry.simworld import default_scene

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

rt = Runtime(RunConfig(fps=15.0), default_scene())
with rt, SentryService(rt, port=0) as svc:
    print(f"serving {svc.url}")
    conn = http.client.HTTPConnection("127.0.0.1", svc.port, timeout=10)

    conn.request("GET", "/stream")
    resp = conn.getresponse()
    reader = io.BufferedReader(resp, buffer_size=1 << 16)

    jpeg = b""
    for _ in range(10):
        line = reader.readline()
        if line == b"\r\n":
            line = reader.readline()
        assert line == b"--frame\r\n", line
        headers = {}
        while (line := reader.readline()) != b"\r\n":
            key, _, value = line.decode().rstrip("\r\n").partition(": ")
            headers[key] = value
        jpeg = reader.read(int(headers["Content-Length"]))
        reader.read(2)  # trailing CRLF
        # capture stamps use the process monotonic clock, so compare on it
        age_ms = time.monotonic() * 1000 - int(headers["X-Capture-Ms"])
        print(f"frame seq={headers['X-Seq']:>3}  {len(jpeg):6d} bytes  "
              f"{age_ms:5.1f} ms old on arrival")
    conn.close()

    # the status document rides on a plain GET
    conn = http.client.HTTPConnection("127.0.0.1", svc.port, timeout=10)
    conn.request("GET", "/status")
    doc = json.loads(conn.getresponse().read())
    print(f"status: mode={doc['mode']} fps={doc['fps_1s']} "
          f"{len(doc['detections'])} detections")
    conn.close()

(out / "snapshot.jpg").write_bytes(jpeg)
print(f"wrote {out / 'snapshot.jpg'}")
