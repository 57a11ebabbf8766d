#!/usr/bin/env python3
"""Measure stream and telemetry latency against a loopback server.

Same harness the `stereosentry bench` command uses: a client decodes
every streamed JPEG while a second one posts head poses at 30 Hz.
"""

import json

from stereosentry.bench import run_benchmark
from stereosentry.config import RunConfig

report = run_benchmark(RunConfig(port=0, command_port=0), duration_s=8.0)
print(json.dumps(report, indent=2))

print(f"\nstreamed at {report['fps']} fps")
print(f"server pipeline p95: {report['pipeline_ms']['p95']} ms (budget 60)")
print(f"glass to glass p95:  {report['glass_to_glass_ms']['p95']} ms (budget 100)")
print(f"telemetry rtt p95:   {report['telemetry_rtt_ms']['p95']} ms (budget 60)")
