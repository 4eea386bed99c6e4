"""Datagram wire format for the two-peer session.

Little-endian throughout, magic 'HS', version 1.  Five message types:
SENSOR (the 31-byte sample below), CLOCK_PING/CLOCK_PONG (four-timestamp
clock exchange), HELLO and BYE.  Datagrams never exceed 512 bytes and
decode rejects anything it cannot account for byte-by-byte, so the codec
is bijective on valid messages.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

MAGIC = b"HS"
VERSION = 1
MAX_DATAGRAM = 512

TYPE_SENSOR = 1
TYPE_CLOCK_PING = 2
TYPE_CLOCK_PONG = 3
TYPE_HELLO = 4
TYPE_BYE = 5

PHASE_IDLE = 0
PHASE_CLASPED = 1
PHASE_RELEASED = 2

_SAMPLE_FMT = "<IQhhHiiiB"  # seq, t_send, thumb, middle, grip, wrist xyz, phase
_SAMPLE_SIZE = struct.calcsize(_SAMPLE_FMT)
_HEADER_FMT = "<2sBB"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)


class MalformedMessageError(ValueError):
    """Datagram failed to decode; .reason carries the category."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class SensorSample:
    """One timestamped sensor reading of a single party."""

    seq: int          # u32, strictly increasing per sender
    t_send_us: int    # u64, sender-monotonic microseconds
    thumb_cdeg: int   # i16, thumb first joint, centidegrees
    middle_cdeg: int  # i16, middle second joint, centidegrees
    grip_milli: int   # u16, grip in thousandths, 0..1000
    wrist_mm: tuple[int, int, int]  # i32 each, wrist position, millimeters
    phase: int        # u8, sender's contact phase (PHASE_* constants)

    def __post_init__(self) -> None:
        if not 0 <= self.seq < 2**32:
            raise MalformedMessageError("bad_value", f"seq {self.seq}")
        if not 0 <= self.t_send_us < 2**64:
            raise MalformedMessageError("bad_value", f"t_send_us {self.t_send_us}")
        for v in (self.thumb_cdeg, self.middle_cdeg):
            if not -(2**15) <= v < 2**15:
                raise MalformedMessageError("bad_value", f"angle {v} cdeg")
        if not 0 <= self.grip_milli <= 1000:
            raise MalformedMessageError("bad_value", f"grip_milli {self.grip_milli}")
        for v in self.wrist_mm:
            if not -(2**31) <= v < 2**31:
                raise MalformedMessageError("bad_value", f"wrist {v} mm")
        if self.phase not in (PHASE_IDLE, PHASE_CLASPED, PHASE_RELEASED):
            raise MalformedMessageError("bad_value", f"phase {self.phase}")

    @property
    def grip(self) -> float:
        return self.grip_milli / 1000.0


@dataclass(frozen=True)
class Hello:
    peer_id: int  # u32


@dataclass(frozen=True)
class Sensor:
    sample: SensorSample


@dataclass(frozen=True)
class ClockPing:
    t1_us: int  # sender clock at send


@dataclass(frozen=True)
class ClockPong:
    t1_us: int  # echoed from the ping
    t2_us: int  # responder clock at ping receipt
    t3_us: int  # responder clock at pong send


@dataclass(frozen=True)
class Bye:
    pass


WireMessage = Hello | Sensor | ClockPing | ClockPong | Bye


def _pack_sample(s: SensorSample) -> bytes:
    return struct.pack(_SAMPLE_FMT, s.seq, s.t_send_us, s.thumb_cdeg, s.middle_cdeg,
                       s.grip_milli, *s.wrist_mm, s.phase)


def encode_message(msg: WireMessage) -> bytes:
    if isinstance(msg, Sensor):
        body = struct.pack(_HEADER_FMT, MAGIC, VERSION, TYPE_SENSOR) + _pack_sample(msg.sample)
    elif isinstance(msg, ClockPing):
        body = struct.pack(_HEADER_FMT + "Q", MAGIC, VERSION, TYPE_CLOCK_PING, msg.t1_us)
    elif isinstance(msg, ClockPong):
        body = struct.pack(_HEADER_FMT + "QQQ", MAGIC, VERSION, TYPE_CLOCK_PONG,
                           msg.t1_us, msg.t2_us, msg.t3_us)
    elif isinstance(msg, Hello):
        body = struct.pack(_HEADER_FMT + "I", MAGIC, VERSION, TYPE_HELLO, msg.peer_id)
    elif isinstance(msg, Bye):
        body = struct.pack(_HEADER_FMT, MAGIC, VERSION, TYPE_BYE)
    else:
        raise TypeError(f"not a wire message: {type(msg).__name__}")
    assert len(body) <= MAX_DATAGRAM
    return body


_PAYLOAD_SIZES = {
    TYPE_SENSOR: _SAMPLE_SIZE,
    TYPE_CLOCK_PING: 8,
    TYPE_CLOCK_PONG: 24,
    TYPE_HELLO: 4,
    TYPE_BYE: 0,
}


def decode_message(data: bytes) -> WireMessage:
    if len(data) > MAX_DATAGRAM:
        raise MalformedMessageError("oversize", f"{len(data)} bytes")
    if len(data) < _HEADER_SIZE:
        raise MalformedMessageError("short_header", f"{len(data)} bytes")
    magic, version, mtype = struct.unpack_from(_HEADER_FMT, data)
    if magic != MAGIC:
        raise MalformedMessageError("bad_magic", magic.hex())
    if version != VERSION:
        raise MalformedMessageError("bad_version", str(version))
    if mtype not in _PAYLOAD_SIZES:
        raise MalformedMessageError("bad_type", str(mtype))
    payload = data[_HEADER_SIZE:]
    want = _PAYLOAD_SIZES[mtype]
    if len(payload) < want:
        raise MalformedMessageError("short_payload", f"{len(payload)} < {want}")
    if len(payload) > want:
        raise MalformedMessageError("trailing_bytes", f"{len(payload)} > {want}")

    if mtype == TYPE_SENSOR:
        seq, t_send, thumb, middle, grip, wx, wy, wz, phase = struct.unpack(_SAMPLE_FMT, payload)
        return Sensor(SensorSample(seq, t_send, thumb, middle, grip, (wx, wy, wz), phase))
    if mtype == TYPE_CLOCK_PING:
        (t1,) = struct.unpack("<Q", payload)
        return ClockPing(t1)
    if mtype == TYPE_CLOCK_PONG:
        t1, t2, t3 = struct.unpack("<QQQ", payload)
        return ClockPong(t1, t2, t3)
    if mtype == TYPE_HELLO:
        (peer_id,) = struct.unpack("<I", payload)
        return Hello(peer_id)
    return Bye()
