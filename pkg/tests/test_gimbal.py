import math
import socket
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stereosentry.gimbal import (
    CommandBroadcaster,
    CommandParseError,
    GimbalState,
    InvalidCommandError,
    ServoCommand,
    encode_command,
    parse_command,
    set_target,
    tick,
)


def test_set_target_clips_and_preserves_current():
    s = GimbalState(yaw=10.0, pitch=-5.0, roll=2.0)
    s2 = set_target(s, 120.0, -300.0, 45.0)
    assert (s2.target_yaw, s2.target_pitch, s2.target_roll) == (90.0, -90.0, 45.0)
    assert s2.angles == (10.0, -5.0, 2.0)


def test_set_target_rejects_non_finite():
    s = GimbalState()
    for bad in (math.nan, math.inf, -math.inf):
        with pytest.raises(InvalidCommandError):
            set_target(s, bad, 0.0, 0.0)


def test_tick_step_is_six_degrees():
    s = set_target(GimbalState(), 90.0, 0.0, 0.0)
    s = tick(s)
    assert s.yaw == pytest.approx(6.0, abs=1e-12)


def test_arrival_in_fifteen_ticks_without_overshoot():
    s = set_target(GimbalState(), 90.0, -90.0, 0.0)
    for n in range(15):
        assert s.yaw < 90.0 and s.pitch > -90.0
        s = tick(s)
    assert s.yaw == 90.0 and s.pitch == -90.0
    assert tick(s).angles == s.angles  # fixed point at target


def test_small_error_lands_exactly():
    s = set_target(GimbalState(), 3.0, -2.5, 0.1)
    s = tick(s)
    assert s.angles == (3.0, -2.5, 0.1)


def test_tick_requires_positive_dt():
    s = GimbalState()
    for dt in (0.0, -0.01):
        with pytest.raises(ValueError):
            tick(s, dt)


def test_state_validation():
    with pytest.raises(ValueError):
        GimbalState(yaw=91.0)
    with pytest.raises(ValueError):
        GimbalState(tick_s=0.0)


command = st.tuples(
    st.floats(min_value=-400, max_value=400),
    st.floats(min_value=-400, max_value=400),
    st.floats(min_value=-400, max_value=400),
)
step = st.one_of(
    st.tuples(st.just("target"), command),
    st.tuples(st.just("tick"), st.floats(min_value=1e-4, max_value=0.5)),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(step, min_size=1, max_size=40))
def test_bounds_and_rate_hold_for_any_schedule(ops):
    s = GimbalState()
    for kind, arg in ops:
        if kind == "target":
            s = set_target(s, *arg)
            assert all(abs(t) <= 90.0 for t in
                       (s.target_yaw, s.target_pitch, s.target_roll))
        else:
            before = s.angles
            s = tick(s, arg)
            budget = s.max_rate_deg_s * arg + 1e-9
            for b, a in zip(before, s.angles):
                assert abs(a) <= 90.0
                assert abs(a - b) <= budget


def test_encode_examples():
    assert encode_command(ServoCommand(12, 10.0, -5.5, 0.0)) == b"G 12 Y10.0 P-5.5 R0.0\n"
    assert encode_command(ServoCommand(1, 120.0, 0.0, 0.0)) == b"G 1 Y90.0 P0.0 R0.0\n"


def test_parse_examples():
    c = parse_command(b"G 12 Y10.0 P-5.5 R0.0\n")
    assert (c.seq, c.yaw, c.pitch, c.roll) == (12, 10.0, -5.5, 0.0)
    assert not c.clipped
    # trailing CR tolerated
    assert parse_command(b"G 12 Y10.0 P-5.5 R0.0\r\n") == c


def test_parse_clips_and_flags_out_of_range():
    c = parse_command(b"G 3 Y123.4 P0.0 R0.0\n")
    assert c.yaw == 90.0 and c.clipped


def test_parse_errors_carry_byte_offsets():
    with pytest.raises(CommandParseError) as e:
        parse_command(b"X 1 Y0 P0 R0\n")
    assert e.value.offset == 0
    with pytest.raises(CommandParseError) as e:
        parse_command(b"G 12 Y10.0\n")  # pitch field missing
    assert e.value.offset == 10
    with pytest.raises(CommandParseError) as e:
        parse_command(b"G 12 Y10.0 Pabc R0.0\n")
    assert e.value.offset == 12
    with pytest.raises(CommandParseError) as e:
        parse_command(b"G 1 Y0.0 P0.0 R0.0\nextra")
    assert e.value.offset == 19


@settings(max_examples=500, deadline=None)
@given(
    seq=st.integers(min_value=0, max_value=2**31),
    deci=st.tuples(st.integers(-900, 900), st.integers(-900, 900),
                   st.integers(-900, 900)),
)
def test_codec_round_trip_full_range(seq, deci):
    cmd = ServoCommand(seq, deci[0] / 10.0, deci[1] / 10.0, deci[2] / 10.0)
    assert parse_command(encode_command(cmd)) == cmd


def test_broadcaster_streams_lines_to_subscriber():
    with CommandBroadcaster(port=0) as bus:
        client = socket.create_connection(("127.0.0.1", bus.port), timeout=2.0)
        client.settimeout(2.0)
        deadline = time.monotonic() + 2.0
        while not bus._clients and time.monotonic() < deadline:
            time.sleep(0.01)
        assert bus._clients, "subscriber was never accepted"

        bus.publish(ServoCommand(1, 6.0, 0.0, 0.0))
        bus.publish(ServoCommand(2, 12.0, -3.5, 0.0))
        reader = client.makefile("rb")
        assert reader.readline() == b"G 1 Y6.0 P0.0 R0.0\n"
        assert reader.readline() == b"G 2 Y12.0 P-3.5 R0.0\n"
        client.close()

        # a vanished client must not break later publishes
        bus.publish(ServoCommand(3, 0.0, 0.0, 0.0))
        bus.publish(ServoCommand(4, 0.0, 0.0, 0.0))
