"""Servo frame codec, CRC, byte stuffing, goal scheduling, motor sim."""

import random
from fractions import Fraction
import struct

import pytest
from hypothesis import given, strategies as st

from vrshake.bus import (
    ADDR_GOAL_POSITION,
    HEADER,
    INST_PING,
    INST_WRITE,
    ChannelConfig,
    FrameCapture,
    FrameError,
    FrameRejectedError,
    SimDevice,
    SimMotorState,
    channels_from_config,
    crc16,
    decode_frame,
    decode_goal_write,
    default_channels,
    encode_frame,
    encode_goal_write,
    intensity_to_goal,
    read_capture,
    schedule,
    sim_step,
    stuff,
    unstuff,
)
from vrshake.core import ConfigError, InvalidInputError, StimulusDistribution

from oracles import crc16_bitwise, goal_exact, half_boundary_distance


# --- CRC -------------------------------------------------------------------

def test_crc_of_documented_ping_frame():
    # vendor-documented example: ping, id 1, no params
    body = bytes([0xFF, 0xFF, 0xFD, 0x00, 0x01, 0x03, 0x00, 0x01])
    assert crc16_bitwise(body) == 0x4E19
    assert crc16(body) == 0x4E19


def test_crc_table_matches_bitwise_oracle_on_random_strings():
    rng = random.Random(0xC4C)
    for _ in range(500):
        data = rng.randbytes(rng.randrange(0, 64))
        assert crc16(data) == crc16_bitwise(data)


@given(st.binary(max_size=128))
def test_crc_table_matches_bitwise_oracle(data):
    assert crc16(data) == crc16_bitwise(data)


# --- byte stuffing ---------------------------------------------------------

def test_header_pattern_in_payload_gets_escaped():
    stuffed = stuff(b"\xff\xff\xfd")
    assert stuffed == b"\xff\xff\xfd\xfd"
    assert unstuff(stuffed) == b"\xff\xff\xfd"


def test_stuffing_leaves_innocent_bytes_alone():
    assert stuff(b"\xff\xff\xfc") == b"\xff\xff\xfc"
    assert stuff(b"") == b""


def test_adversarial_patterns_round_trip():
    cases = [
        b"\xff\xff\xfd" * 5,
        b"\xff" * 8,
        b"\xfd" * 8,
        b"\xff\xff\xfd\xfd",          # already looks escaped
        b"\x00\xff\xff\xfd\x00\xff\xff\xfd",
        b"\xff\xff" + b"\xfd\xff\xff" * 4 + b"\xfd",
    ]
    for body in cases:
        assert unstuff(stuff(body)) == body


@given(st.binary(max_size=64))
def test_stuffing_inverse_property(body):
    assert unstuff(stuff(body)) == body


@given(st.binary(max_size=64))
def test_stuffing_inverse_with_planted_headers(body):
    planted = b"\xff\xff\xfd" + body + b"\xff\xff\xfd"
    assert unstuff(stuff(planted)) == planted


def test_unescaped_header_in_body_rejected():
    with pytest.raises(FrameError) as err:
        unstuff(b"\x01\xff\xff\xfd\x02")
    assert err.value.reason == "bad_stuffing"


# --- frame codec -----------------------------------------------------------

def test_ping_frame_layout_is_bit_exact():
    frame = encode_frame(1, INST_PING, b"")
    assert frame == bytes.fromhex("fffffd0001030001194e")


def test_random_frames_round_trip():
    rng = random.Random(7)
    for _ in range(500):
        motor_id = rng.randrange(0, 253)
        instruction = rng.randrange(1, 0x100)
        params = rng.randbytes(rng.randrange(0, 40))
        frame = encode_frame(motor_id, instruction, params)
        assert decode_frame(frame) == (motor_id, instruction, params)


@given(st.integers(0, 252), st.integers(1, 255), st.binary(max_size=48))
def test_frame_round_trip_property(motor_id, instruction, params):
    frame = encode_frame(motor_id, instruction, params)
    assert decode_frame(frame) == (motor_id, instruction, params)
    assert frame.startswith(HEADER)


def test_decode_rejects_short_frames():
    with pytest.raises(FrameError) as err:
        decode_frame(b"\xff\xff\xfd\x00\x01")
    assert err.value.reason == "short_frame"


def test_decode_rejects_wrong_header():
    frame = bytearray(encode_frame(1, INST_PING, b""))
    frame[2] = 0xFC
    with pytest.raises(FrameError) as err:
        decode_frame(bytes(frame))
    assert err.value.reason == "bad_header"


def test_decode_rejects_corrupt_crc():
    frame = bytearray(encode_frame(7, INST_WRITE, b"\x01\x02"))
    frame[-1] ^= 0x40
    with pytest.raises(FrameError) as err:
        decode_frame(bytes(frame))
    assert err.value.reason == "bad_crc"


def test_decode_rejects_length_mismatch():
    frame = bytearray(encode_frame(7, INST_WRITE, b"\x01\x02"))
    frame[5] ^= 0x01  # length low byte; CRC now also wrong, length checked first
    with pytest.raises(FrameError):
        decode_frame(bytes(frame))


def test_encode_rejects_out_of_range_motor_id():
    with pytest.raises(InvalidInputError):
        encode_frame(253, INST_PING, b"")


def test_decode_rejects_reserved_motor_id():
    frame = bytearray(encode_frame(1, INST_PING, b""))
    frame[4] = 253
    frame[-2:] = struct.pack("<H", crc16(bytes(frame[:-2])))
    with pytest.raises(FrameError):
        decode_frame(bytes(frame))


@given(st.binary(max_size=40))
def test_decode_never_panics_on_garbage(data):
    try:
        decode_frame(data)
    except FrameError:
        pass


# --- goal-position writes --------------------------------------------------

def test_goal_write_round_trip():
    frame = encode_goal_write(3, -12345)
    motor_id, goal = decode_goal_write(frame)
    assert (motor_id, goal) == (3, -12345)
    # and the raw params carry the register address little-endian
    _, instruction, params = decode_frame(frame)
    assert instruction == INST_WRITE
    assert params[:2] == struct.pack("<H", ADDR_GOAL_POSITION)


def test_goal_write_with_stuffed_payload_round_trips():
    # goal 0x00FDFFFF: params contain FF FF FD and must be escaped on the wire
    frame = encode_goal_write(1, 0x00FDFFFF)
    assert b"\xff\xff\xfd\xfd" in frame
    assert decode_goal_write(frame) == (1, 0x00FDFFFF)


def test_half_intensity_lands_mid_span():
    ch = ChannelConfig(motor_id=1, rest_ticks=2048, span_ticks=511)
    assert intensity_to_goal(0.5, ch) == goal_exact(Fraction(1, 2), 2048, 511) == 2304


def test_exact_half_products_round_away_from_rest():
    # 0.5 * 511 = 255.5: the tie must move outward, not to even
    ch_up = ChannelConfig(motor_id=1, rest_ticks=2048, span_ticks=511)
    ch_down = ChannelConfig(motor_id=1, rest_ticks=2048, span_ticks=-511)
    assert intensity_to_goal(0.5, ch_up) == 2048 + 256
    assert intensity_to_goal(0.5, ch_down) == 2048 - 256


def test_intensity_rounding_matches_exact_rational_oracle():
    rng = random.Random(31)
    checked = 0
    while checked < 2000:
        intensity = rng.randrange(0, 1001) / 1000 if rng.random() < 0.5 else rng.random()
        ch = ChannelConfig(motor_id=1,
                           rest_ticks=rng.randrange(0, 4096),
                           span_ticks=rng.randrange(-2048, 2048) or 512)
        exact = Fraction(intensity)
        gap = half_boundary_distance(exact, ch.span_ticks)
        if 0 < gap < Fraction(1, 10 ** 9):
            continue  # knife edge: float multiply may defensibly tip either way
        assert intensity_to_goal(intensity, ch) == goal_exact(exact, ch.rest_ticks,
                                                              ch.span_ticks)
        checked += 1


def test_intensity_bounds_enforced():
    ch = ChannelConfig(motor_id=1)
    with pytest.raises(InvalidInputError):
        intensity_to_goal(1.5, ch)
    with pytest.raises(InvalidInputError):
        intensity_to_goal(-0.1, ch)


def test_schedule_emits_one_frame_per_site_in_channel_order():
    channels = default_channels()
    dist = StimulusDistribution((0.0, 0.25, 0.5, 0.75, 1.0, 0.1, 0.9))
    frames = schedule(dist, channels)
    assert len(frames) == 7
    for i, frame in enumerate(frames):
        motor_id, goal = decode_goal_write(frame)
        assert motor_id == channels[i].motor_id
        assert goal == intensity_to_goal(dist.intensity[i], channels[i])


def test_schedule_rejects_duplicate_motor_ids():
    channels = tuple(ChannelConfig(motor_id=1) for _ in range(7))
    with pytest.raises(ConfigError):
        schedule(StimulusDistribution((0.0,) * 7), channels)


def test_channels_from_config_overrides_one_site():
    channels = channels_from_config({"chan_palm_center": "9:1000:256:2048"})
    assert channels[6] == ChannelConfig(9, 1000, 256, 2048)
    assert channels[0].motor_id == 1
    with pytest.raises(ConfigError):
        channels_from_config({"chan_palm_center": "9:1000"})
    with pytest.raises(ConfigError):
        channels_from_config({"chan_nowhere": "9:1000:256:2048"})


# --- simulated motor -------------------------------------------------------

def test_motor_moves_toward_goal_at_bounded_rate():
    ch = ChannelConfig(motor_id=1, rest_ticks=0, span_ticks=4096, max_ticks_per_s=1000)
    state = SimMotorState(position_ticks=0, goal_ticks=0, t_last_us=0)
    frame = encode_goal_write(1, 4000)
    state = sim_step(state, frame, ch, now_us=0)
    assert state.goal_ticks == 4000 and state.position_ticks == 0
    state = sim_step(state, encode_goal_write(1, 4000), ch, now_us=500_000)
    assert state.position_ticks == 500          # 0.5 s at 1000 ticks/s
    state = sim_step(state, encode_goal_write(1, 4000), ch, now_us=10_000_000)
    assert state.position_ticks == 4000         # clamped at the goal, no overshoot


def test_motor_rate_limit_is_exact_across_odd_tick_sizes():
    # 333 steps of 3333 us at 997 ticks/s: accumulated credit must neither
    # leak nor bank, so total travel stays within one tick of rate * time
    ch = ChannelConfig(motor_id=1, rest_ticks=0, span_ticks=4096, max_ticks_per_s=997)
    state = SimMotorState(position_ticks=0, goal_ticks=0, t_last_us=0)
    frame = encode_goal_write(1, 100_000)
    now = 0
    for _ in range(333):
        now += 3333
        state = sim_step(state, frame, ch, now_us=now)
    exact = 997 * now / 1e6
    assert abs(state.position_ticks - exact) <= 1


def test_motor_reaching_goal_forfeits_leftover_credit():
    ch = ChannelConfig(motor_id=1, rest_ticks=0, span_ticks=4096, max_ticks_per_s=1000)
    state = SimMotorState(position_ticks=0, goal_ticks=0, t_last_us=0)
    state = sim_step(state, encode_goal_write(1, 10), ch, now_us=1_000_000)
    assert state.position_ticks == 10
    # a full second of credit was available; none of it may carry over
    state = sim_step(state, encode_goal_write(1, 20), ch, now_us=1_001_000)
    assert state.position_ticks == 11


def test_motor_rejects_frames_for_other_ids():
    ch = ChannelConfig(motor_id=1)
    state = SimMotorState(position_ticks=0, goal_ticks=0, t_last_us=0)
    with pytest.raises(FrameRejectedError):
        sim_step(state, encode_goal_write(2, 100), ch, now_us=0)


def test_motor_rejects_corrupt_frames():
    ch = ChannelConfig(motor_id=1)
    state = SimMotorState(position_ticks=0, goal_ticks=0, t_last_us=0)
    frame = bytearray(encode_goal_write(1, 100))
    frame[-1] ^= 1
    with pytest.raises(FrameRejectedError):
        sim_step(state, bytes(frame), ch, now_us=0)


def test_device_tracks_all_seven_motors():
    channels = default_channels()
    device = SimDevice(channels)
    dist = StimulusDistribution((1.0,) * 7)
    for frame in schedule(dist, channels):
        device.submit(frame, now_us=10_000_000)  # long enough to settle
    expected = {ch.motor_id: intensity_to_goal(1.0, ch) for ch in channels}
    assert device.positions() == expected


# --- capture log -----------------------------------------------------------

def test_capture_file_round_trips_frames(tmp_path):
    path = tmp_path / "frames.bin"
    frames = [encode_goal_write(i + 1, i * 100) for i in range(7)]
    with FrameCapture(path) as cap:
        for frame in frames:
            cap.write(frame)
    assert read_capture(path) == frames
