"""Servo-bus back end for the 7-site skin-deformation display.

Intensities in [0, 1] become goal positions for band-winding gear
motors, encoded as write frames in the vendor wire format of the
XC-330 family (header FF FF FD 00, little-endian length, byte
stuffing, CRC-16/0x8005).  The bus is write-only: the engine never
reads motor state back.  A simulated rate-limited motor bank and a
binary frame-capture log stand in for real hardware.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

from .core import (
    NUM_SITES,
    ConfigError,
    InvalidInputError,
    SiteId,
    StimulusDistribution,
)

HEADER = b"\xff\xff\xfd\x00"
MAX_MOTOR_ID = 252           # 253 reserved, 254 broadcast
INST_PING = 0x01
INST_WRITE = 0x03
ADDR_GOAL_POSITION = 116     # 4-byte register, XC-330 control table

# Minimum well-formed frame: header(4) id(1) len(2) instr(1) crc(2).
_MIN_FRAME = 10


class FrameError(ValueError):
    """A byte sequence is not a well-formed bus frame."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class FrameRejectedError(FrameError):
    """A frame failed validation at the simulated device; state unchanged."""


def _build_crc_table(poly: int = 0x8005) -> tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ poly) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _build_crc_table()


def crc16(data: bytes) -> int:
    """CRC-16, polynomial 0x8005, init 0, no reflection, no final xor."""
    crc = 0
    for b in data:
        crc = ((crc << 8) ^ _CRC_TABLE[((crc >> 8) ^ b) & 0xFF]) & 0xFFFF
    return crc


def stuff(body: bytes) -> bytes:
    """Append 0xFD after every 0xFF 0xFF 0xFD run in the instr+params region."""
    out = bytearray()
    for b in body:
        out.append(b)
        if b == 0xFD and len(out) >= 3 and out[-2] == 0xFF and out[-3] == 0xFF:
            out.append(0xFD)
    return bytes(out)


def unstuff(body: bytes) -> bytes:
    """Inverse of stuff(); rejects a bare header pattern inside the body."""
    out = bytearray()
    i = 0
    n = len(body)
    while i < n:
        b = body[i]
        out.append(b)
        i += 1
        if b == 0xFD and len(out) >= 3 and out[-2] == 0xFF and out[-3] == 0xFF:
            if i >= n or body[i] != 0xFD:
                raise FrameError("bad_stuffing", "header pattern not escaped in body")
            i += 1  # drop the stuffing byte
    return bytes(out)


def encode_frame(motor_id: int, instruction: int, params: bytes) -> bytes:
    if not 0 <= motor_id <= MAX_MOTOR_ID:
        raise InvalidInputError(f"motor id {motor_id} outside 0..{MAX_MOTOR_ID}")
    body = stuff(bytes([instruction]) + params)
    length = len(body) + 2  # + CRC
    frame = bytearray(HEADER)
    frame.append(motor_id)
    frame += struct.pack("<H", length)
    frame += body
    frame += struct.pack("<H", crc16(bytes(frame)))
    return bytes(frame)


def decode_frame(frame: bytes) -> tuple[int, int, bytes]:
    """Validate and split a frame into (motor_id, instruction, params)."""
    if len(frame) < _MIN_FRAME:
        raise FrameError("short_frame", f"{len(frame)} bytes")
    if frame[:4] != HEADER:
        raise FrameError("bad_header")
    motor_id = frame[4]
    if motor_id > MAX_MOTOR_ID:
        raise FrameError("bad_id", str(motor_id))
    (length,) = struct.unpack_from("<H", frame, 5)
    if length != len(frame) - 7:
        raise FrameError("bad_length", f"field {length}, actual {len(frame) - 7}")
    (crc,) = struct.unpack_from("<H", frame, len(frame) - 2)
    if crc != crc16(frame[:-2]):
        raise FrameError("bad_crc")
    body = unstuff(frame[7:-2])
    return motor_id, body[0], body[1:]


def encode_goal_write(motor_id: int, goal_ticks: int) -> bytes:
    """One write frame setting the goal-position register."""
    params = struct.pack("<Hi", ADDR_GOAL_POSITION, goal_ticks)
    return encode_frame(motor_id, INST_WRITE, params)


def decode_goal_write(frame: bytes) -> tuple[int, int]:
    """Inverse of encode_goal_write -> (motor_id, goal_ticks)."""
    motor_id, instruction, params = decode_frame(frame)
    if instruction != INST_WRITE:
        raise FrameError("bad_instruction", hex(instruction))
    if len(params) != 6:
        raise FrameError("bad_params", f"{len(params)} bytes")
    addr, goal = struct.unpack("<Hi", params)
    if addr != ADDR_GOAL_POSITION:
        raise FrameError("bad_register", str(addr))
    return motor_id, goal


@dataclass(frozen=True)
class ChannelConfig:
    """Motor wiring of one stimulus site."""

    motor_id: int
    rest_ticks: int = 2048       # band slack position (intensity 0)
    span_ticks: int = 512        # signed winding travel; placeholder, no hardware figure published
    max_ticks_per_s: int = 4096  # slew rate limit of the simulated motor

    def __post_init__(self) -> None:
        if not 0 <= self.motor_id <= MAX_MOTOR_ID:
            raise InvalidInputError(f"motor id {self.motor_id} outside 0..{MAX_MOTOR_ID}")
        if self.span_ticks == 0:
            raise InvalidInputError("span_ticks must be nonzero")
        if self.max_ticks_per_s <= 0:
            raise InvalidInputError("max_ticks_per_s must be positive")


def default_channels() -> tuple[ChannelConfig, ...]:
    """Motor ids 1..7 in SiteId order with placeholder travel values."""
    return tuple(ChannelConfig(motor_id=i + 1) for i in range(NUM_SITES))


def channels_from_config(raw: dict[str, str]) -> tuple[ChannelConfig, ...]:
    """Read chan_<site>=id:rest:span:max_rate overrides from parsed config keys."""
    channels = list(default_channels())
    known = {f"chan_{site.name.lower()}": site for site in SiteId}
    for key in raw:
        if not key.startswith("chan_"):
            continue
        site = known.get(key)
        if site is None:
            raise ConfigError(f"{key}: unknown site")
        parts = raw[key].split(":")
        if len(parts) != 4:
            raise ConfigError(f"{key}: expected id:rest:span:max_rate, got {raw[key]!r}")
        try:
            channels[site] = ChannelConfig(*(int(p) for p in parts))
        except (ValueError, InvalidInputError) as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    return tuple(channels)


def _round_half_away(v: float) -> int:
    # Deterministic across platforms; round() would round halves to even.
    return math.floor(v + 0.5) if v >= 0 else math.ceil(v - 0.5)


def intensity_to_goal(intensity: float, ch: ChannelConfig) -> int:
    """Linear map from [0, 1] intensity to a goal position in encoder ticks."""
    if not 0.0 <= intensity <= 1.0:
        raise InvalidInputError(f"intensity {intensity!r} outside [0, 1]")
    return ch.rest_ticks + _round_half_away(intensity * ch.span_ticks)


def schedule(dist: StimulusDistribution, channels: tuple[ChannelConfig, ...]) -> list[bytes]:
    """One goal-write frame per site, in SiteId order."""
    if len(channels) != NUM_SITES:
        raise ConfigError(f"expected {NUM_SITES} channels, got {len(channels)}")
    ids = [ch.motor_id for ch in channels]
    if len(set(ids)) != NUM_SITES:
        raise ConfigError(f"duplicate motor ids in channel map: {ids}")
    return [
        encode_goal_write(ch.motor_id, intensity_to_goal(dist[site], ch))
        for site, ch in zip(SiteId, channels)
    ]


@dataclass(frozen=True)
class SimMotorState:
    """Simulated motor shaft state between steps."""

    position_ticks: int
    goal_ticks: int
    t_last_us: int
    credit_microticks: int = 0  # sub-tick slew budget carried across steps


def sim_step(state: SimMotorState, frame: bytes, ch: ChannelConfig, now_us: int) -> SimMotorState:
    """Apply one goal-write frame and slew the shaft up to the rate limit.

    The slew budget accrues in microticks (ticks/s x us) so arbitrarily
    small steps still converge; leftover credit is dropped once the goal
    is reached, so total travel over any window never exceeds the limit.
    """
    try:
        motor_id, goal = decode_goal_write(frame)
    except FrameError as exc:
        raise FrameRejectedError(exc.reason) from exc
    if motor_id != ch.motor_id:
        raise FrameRejectedError("wrong_id", f"frame for {motor_id}, channel is {ch.motor_id}")
    if now_us < state.t_last_us:
        raise InvalidInputError("time went backwards in sim_step")

    credit = state.credit_microticks + ch.max_ticks_per_s * (now_us - state.t_last_us)
    whole = credit // 1_000_000
    gap = goal - state.position_ticks
    move = min(whole, abs(gap))
    position = state.position_ticks + (move if gap >= 0 else -move)
    if position == goal:
        credit = 0
    else:
        credit -= whole * 1_000_000
    return SimMotorState(position_ticks=position, goal_ticks=goal,
                         t_last_us=now_us, credit_microticks=credit)


class SimDevice:
    """Bank of 7 simulated motors, one per site, keyed by motor id.

    Single-owner: exactly one scheduler may step it.
    """

    def __init__(self, channels: tuple[ChannelConfig, ...], t0_us: int = 0):
        if len(channels) != NUM_SITES:
            raise ConfigError(f"expected {NUM_SITES} channels, got {len(channels)}")
        self.channels = {ch.motor_id: ch for ch in channels}
        if len(self.channels) != NUM_SITES:
            raise ConfigError("duplicate motor ids")
        self.states = {
            ch.motor_id: SimMotorState(ch.rest_ticks, ch.rest_ticks, t0_us)
            for ch in channels
        }

    def submit(self, frame: bytes, now_us: int) -> SimMotorState:
        motor_id, _ = decode_goal_write(frame)
        if motor_id not in self.channels:
            raise FrameRejectedError("unknown_id", str(motor_id))
        new = sim_step(self.states[motor_id], frame, self.channels[motor_id], now_us)
        self.states[motor_id] = new
        return new

    def positions(self) -> dict[int, int]:
        return {mid: st.position_ticks for mid, st in self.states.items()}


class FrameCapture:
    """Length-prefixed binary log of raw frames, for offline inspection.

    File layout: repeated records of u16 little-endian frame length
    followed by the frame bytes.
    """

    def __init__(self, path: str):
        self._fh = open(path, "wb")

    def write(self, frame: bytes) -> None:
        self._fh.write(struct.pack("<H", len(frame)))
        self._fh.write(frame)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "FrameCapture":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_capture(path: str) -> list[bytes]:
    frames = []
    with open(path, "rb") as fh:
        while True:
            head = fh.read(2)
            if not head:
                break
            if len(head) != 2:
                raise FrameError("truncated_capture")
            (n,) = struct.unpack("<H", head)
            frame = fh.read(n)
            if len(frame) != n:
                raise FrameError("truncated_capture")
            frames.append(frame)
    return frames
