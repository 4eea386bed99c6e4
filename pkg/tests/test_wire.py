"""Datagram codec: round-trips, golden bytes, and rejection reasons."""

import struct

import pytest
from hypothesis import given, strategies as st

from vrshake.wire import (
    MAGIC,
    MAX_DATAGRAM,
    PHASE_CLASPED,
    PHASE_IDLE,
    TYPE_SENSOR,
    VERSION,
    Bye,
    ClockPing,
    ClockPong,
    Hello,
    MalformedMessageError,
    Sensor,
    SensorSample,
    decode_message,
    encode_message,
)

u32 = st.integers(min_value=0, max_value=2**32 - 1)
u64 = st.integers(min_value=0, max_value=2**64 - 1)
i16 = st.integers(min_value=-(2**15), max_value=2**15 - 1)
i32 = st.integers(min_value=-(2**31), max_value=2**31 - 1)


@st.composite
def samples(draw):
    return SensorSample(
        seq=draw(u32),
        t_send_us=draw(u64),
        thumb_cdeg=draw(i16),
        middle_cdeg=draw(i16),
        grip_milli=draw(st.integers(min_value=0, max_value=1000)),
        wrist_mm=(draw(i32), draw(i32), draw(i32)),
        phase=draw(st.integers(min_value=0, max_value=2)),
    )


messages = st.one_of(
    samples().map(Sensor),
    u64.map(ClockPing),
    st.tuples(u64, u64, u64).map(lambda t: ClockPong(*t)),
    u32.map(Hello),
    st.just(Bye()),
)


@given(messages)
def test_round_trip_and_size_budget(msg):
    data = encode_message(msg)
    assert len(data) <= MAX_DATAGRAM
    assert decode_message(data) == msg


def test_known_sensor_frame_bytes():
    sample = SensorSample(
        seq=7,
        t_send_us=1_000_000,
        thumb_cdeg=-4500,
        middle_cdeg=9000,
        grip_milli=750,
        wrist_mm=(100, -200, 300),
        phase=PHASE_CLASPED,
    )
    expected = bytes.fromhex(
        "48530101"            # 'HS', version 1, type SENSOR
        "07000000"            # seq
        "40420f0000000000"    # t_send_us = 1e6
        "6cee"                # thumb -4500
        "2823"                # middle 9000
        "ee02"                # grip 750
        "64000000"            # wrist x 100
        "38ffffff"            # wrist y -200
        "2c010000"            # wrist z 300
        "01"                  # phase
    )
    assert len(expected) == 35
    assert encode_message(Sensor(sample)) == expected


def test_known_clock_pong_bytes():
    data = encode_message(ClockPong(1, 2, 3))
    assert data[:4] == bytes.fromhex("48530103")
    assert data[4:] == struct.pack("<QQQ", 1, 2, 3)


def _reason(data):
    with pytest.raises(MalformedMessageError) as err:
        decode_message(data)
    return err.value.reason


def test_rejects_bad_magic():
    assert _reason(b"\x00\x00\x01\x05") == "bad_magic"


def test_rejects_unknown_version():
    assert _reason(MAGIC + bytes([2, 5])) == "bad_version"


def test_rejects_unknown_type():
    assert _reason(MAGIC + bytes([VERSION, 9])) == "bad_type"


def test_rejects_short_header():
    assert _reason(b"HS") == "short_header"


def test_rejects_oversized_datagram():
    assert _reason(b"\x00" * (MAX_DATAGRAM + 1)) == "oversize"


def test_rejects_truncated_sensor_payload():
    data = encode_message(Sensor(SensorSample(1, 2, 3, 4, 5, (6, 7, 8), PHASE_IDLE)))
    assert _reason(data[:-1]) == "short_payload"


def test_rejects_trailing_bytes():
    data = encode_message(Hello(peer_id=1))
    assert _reason(data + b"\x00") == "trailing_bytes"


def test_rejects_out_of_range_sensor_values_on_decode():
    good = encode_message(Sensor(SensorSample(1, 2, 3, 4, 5, (6, 7, 8), PHASE_IDLE)))
    # Patch grip_milli (offset 4+4+8+2+2) to 1001 and phase (last byte) to 7.
    bad_grip = bytearray(good)
    struct.pack_into("<H", bad_grip, 20, 1001)
    assert _reason(bytes(bad_grip)) == "bad_value"
    bad_phase = good[:-1] + bytes([7])
    assert _reason(bad_phase) == "bad_value"


@given(st.binary(max_size=64))
def test_garbage_never_panics(data):
    try:
        decode_message(data)
    except MalformedMessageError:
        pass


@given(st.binary(min_size=4, max_size=40))
def test_valid_header_with_garbage_payload_never_panics(data):
    framed = MAGIC + bytes([VERSION, TYPE_SENSOR]) + data
    try:
        decode_message(framed)
    except MalformedMessageError:
        pass


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(seq=-1),
        dict(seq=2**32),
        dict(t_send_us=-5),
        dict(thumb_cdeg=2**15),
        dict(middle_cdeg=-(2**15) - 1),
        dict(grip_milli=1001),
        dict(grip_milli=-1),
        dict(wrist_mm=(2**31, 0, 0)),
        dict(phase=3),
    ],
)
def test_sample_validation_at_construction(kwargs):
    base = dict(seq=0, t_send_us=0, thumb_cdeg=0, middle_cdeg=0,
                grip_milli=0, wrist_mm=(0, 0, 0), phase=PHASE_IDLE)
    base.update(kwargs)
    with pytest.raises(MalformedMessageError):
        SensorSample(**base)


def test_grip_property_scales_milli_units():
    s = SensorSample(0, 0, 0, 0, 437, (0, 0, 0), PHASE_IDLE)
    assert s.grip == 0.437


def test_encode_rejects_non_message():
    with pytest.raises(TypeError):
        encode_message("hello")
