#!/usr/bin/env python3
"""Slew-rate limits and the one-line servo protocol, end to end.

First drives a step response through the kinematics, then opens the TCP
mirror and reads the same commands back over a socket as a serial
adapter would.
"""

import socket

from stereosentry.gimbal import (
    CommandBroadcaster,
    GimbalState,
    ServoCommand,
    encode_command,
    parse_command,
    set_target,
    tick,
)

# a 90 degree step at 300 deg/s and a 20 ms tick: 6 degrees per tick
state = set_target(GimbalState(), 90.0, 0.0, 0.0)
n = 0
while not state.at_target:
    state = tick(state)
    n += 1
    if n % 5 == 0 or state.at_target:
        print(f"tick {n:2d}: yaw {state.angles[0]:5.1f} deg")
print(f"step finished in {n} ticks ({n * state.tick_s * 1000:.0f} ms)\n")

# the wire format is one ASCII line per command
cmd = ServoCommand(seq=7, yaw=12.5, pitch=-3.0, roll=0.0)
line = encode_command(cmd)
print(f"encoded: {line!r}")
print(f"parsed back: {parse_command(line)}")

# out-of-range angles are clipped on parse and flagged
hot = parse_command(b"G 8 Y150.0 P0.0 R0.0\n")
print(f"clipped: yaw {hot.yaw} (clipped={hot.clipped})\n")

# same bytes over TCP: anything that can read a socket can follow along
with CommandBroadcaster(port=0) as bus:
    client = socket.create_connection(("127.0.0.1", bus.port), timeout=5)
    reader = client.makefile("rb")
    while not bus._clients:
        pass  # wait for the accept loop to register us
    for seq in range(3):
        bus.publish(ServoCommand(seq=seq, yaw=float(seq * 10), pitch=0.0, roll=0.0))
        print(f"over TCP: {reader.readline()!r}")
    client.close()
