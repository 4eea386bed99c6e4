"""Per-peer session state machine: ingest remote samples, run the tick loop.

The engine is deliberately clock-free: every entry point takes an explicit
microsecond timestamp, so the same code runs against the wall clock, a
virtual clock in the network-impairment harness, and the replayer.  Given
identical timestamped inputs it produces identical outputs.

Loss handling is last-value-wins with a hold-then-fade playout policy: a
remote grip is used as-is while fresh, decays linearly to zero across the
fade window, and is fully released after hold + fade of silence.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .core import (
    ContactPhase,
    DEFAULT_SITE_GROUPS,
    GripCalibration,
    InvalidInputError,
    MappingParams,
    StimulusDistribution,
    angles_from_grip,
    grip_from_angles,
    stimulus_distribution,
    update_phase,
)
from .wire import (
    ClockPing,
    ClockPong,
    MalformedMessageError,
    Sensor,
    SensorSample,
    decode_message,
    encode_message,
)

TICK_PERIOD_US = 10_000      # 100 Hz
HOLD_US = 150_000            # remote grip held as-is up to this staleness
FADE_US = 350_000            # then fades linearly to zero over this window
CLOCK_PING_INTERVAL_US = 1_000_000
OFFSET_EMA_ALPHA = 0.1

_PHASE_TO_WIRE = {ContactPhase.IDLE: 0, ContactPhase.CLASPED: 1, ContactPhase.RELEASED: 2}


def clock_offset(t1: int, t2: int, t3: int, t4: int) -> int:
    """Remote-minus-local clock offset from one ping/pong exchange.

    ((t2 - t1) + (t3 - t4)) / 2, integer division toward zero.  Assumes
    symmetric path delay; asymmetry biases the estimate by half the
    difference of the one-way delays.
    """
    if t4 < t1 or t3 < t2:
        raise InvalidInputError("timestamp regression in clock exchange")
    q = (t2 - t1) + (t3 - t4)
    return q // 2 if q >= 0 else -((-q) // 2)


@dataclass(frozen=True)
class RemoteState:
    """Last accepted remote sample plus receive-side bookkeeping."""

    latest: SensorSample | None = None
    t_recv_us: int = 0
    offset_us: float | None = None  # EMA-smoothed clock offset, informational
    drops: int = 0                  # datagrams discarded as duplicates/reordered

    def staleness_us(self, now_us: int) -> int | None:
        if self.latest is None:
            return None
        return max(0, now_us - self.t_recv_us)


def ingest(state: RemoteState, sample: SensorSample, now_us: int) -> RemoteState:
    """Accept a remote sample iff its seq is newer than the held one."""
    if state.latest is not None and sample.seq <= state.latest.seq:
        return replace(state, drops=state.drops + 1)
    return replace(state, latest=sample, t_recv_us=now_us)


def smooth_offset(state: RemoteState, raw_offset_us: int) -> RemoteState:
    if state.offset_us is None:
        return replace(state, offset_us=float(raw_offset_us))
    ema = (1.0 - OFFSET_EMA_ALPHA) * state.offset_us + OFFSET_EMA_ALPHA * raw_offset_us
    return replace(state, offset_us=ema)


@dataclass(frozen=True)
class TickOutput:
    """One tick of the render pipeline."""

    t_us: int
    phase: ContactPhase
    dist: StimulusDistribution
    own_grip: float
    opp_grip: float
    stale: bool


def effective_remote_grip(
    remote: RemoteState,
    now_us: int,
    hold_us: int = HOLD_US,
    fade_us: int = FADE_US,
) -> tuple[float, bool]:
    """Playout policy: (grip to render, stale flag) for the current instant."""
    staleness = remote.staleness_us(now_us)
    if staleness is None:
        return 0.0, True
    grip = remote.latest.grip
    if staleness <= hold_us:
        return grip, False
    if staleness <= hold_us + fade_us:
        return grip * (hold_us + fade_us - staleness) / fade_us, True
    return 0.0, True


def tick(
    own: SensorSample,
    remote: RemoteState,
    prev_phase: ContactPhase,
    params: MappingParams,
    now_us: int,
    site_groups: tuple[str, ...] = DEFAULT_SITE_GROUPS,
    hold_us: int = HOLD_US,
    fade_us: int = FADE_US,
) -> TickOutput:
    """Combine own and (possibly faded) remote grip into one stimulus frame."""
    own_grip = own.grip
    opp_grip, stale = effective_remote_grip(remote, now_us, hold_us, fade_us)
    phase = update_phase(own_grip, opp_grip, prev_phase, params)
    dist = stimulus_distribution(own_grip, opp_grip, phase, params, site_groups)
    return TickOutput(t_us=now_us, phase=phase, dist=dist,
                      own_grip=own_grip, opp_grip=opp_grip, stale=stale)


@dataclass(frozen=True)
class SensorReading:
    """Raw per-tick input from whatever drives this peer (glove, script, UI)."""

    grip: float                      # [0, 1]
    wrist_mm: tuple[int, int, int]   # integer millimeters


class SessionEngine:
    """Owns one peer's session state across ticks.

    Single-owner by contract: the tick loop is the only caller; a network
    receiver must hand decoded datagrams over rather than touch state.
    """

    def __init__(
        self,
        params: MappingParams | None = None,
        calibration: GripCalibration | None = None,
        site_groups: tuple[str, ...] = DEFAULT_SITE_GROUPS,
        hold_us: int = HOLD_US,
        fade_us: int = FADE_US,
        peer_id: int = 0,
        recorder=None,
    ):
        self.params = params or MappingParams()
        self.calibration = calibration or GripCalibration()
        self.site_groups = site_groups
        self.hold_us = hold_us
        self.fade_us = fade_us
        self.peer_id = peer_id
        self.recorder = recorder
        self.remote = RemoteState()
        self.phase = ContactPhase.IDLE
        self.seq = 0
        self.decode_errors = 0
        self.last_ping_us: int | None = None
        self._pending_ping_t1: int | None = None

    # -- receive path ---------------------------------------------------

    def handle_datagram(self, data: bytes, now_us: int) -> list[bytes]:
        """Decode one datagram; never raises on garbage.  Returns replies."""
        try:
            msg = decode_message(data)
        except MalformedMessageError:
            self.decode_errors += 1
            return []
        if isinstance(msg, Sensor):
            before = self.remote.latest
            self.remote = ingest(self.remote, msg.sample, now_us)
            if self.recorder is not None and self.remote.latest is not before:
                self.recorder.add_remote(msg.sample, now_us)
            return []
        if isinstance(msg, ClockPing):
            # Receipt and reply happen within one loop turn: t2 == t3.
            return [encode_message(ClockPong(t1_us=msg.t1_us, t2_us=now_us, t3_us=now_us))]
        if isinstance(msg, ClockPong):
            if self._pending_ping_t1 is not None and msg.t1_us == self._pending_ping_t1:
                try:
                    raw = clock_offset(msg.t1_us, msg.t2_us, msg.t3_us, now_us)
                except InvalidInputError:
                    return []  # regressed timestamps: discard the sample
                self.remote = smooth_offset(self.remote, raw)
                self._pending_ping_t1 = None
            return []
        # Hello and Bye carry no session state yet.
        return []

    # -- send path --------------------------------------------------------

    def make_own_sample(self, reading: SensorReading, now_us: int) -> SensorSample:
        angles = angles_from_grip(reading.grip, self.calibration)
        grip = grip_from_angles(angles, self.calibration)
        self.seq += 1
        return SensorSample(
            seq=self.seq,
            t_send_us=now_us,
            thumb_cdeg=int(round(angles.thumb_ip_deg * 100)),
            middle_cdeg=int(round(angles.middle_pip_deg * 100)),
            grip_milli=int(round(grip * 1000)),
            wrist_mm=reading.wrist_mm,
            phase=_PHASE_TO_WIRE[self.phase],
        )

    def outbound(self, sample: SensorSample, now_us: int) -> list[bytes]:
        """Datagrams to send this tick: the sample, plus a clock ping when due."""
        out = [encode_message(Sensor(sample))]
        if self.last_ping_us is None or now_us - self.last_ping_us >= CLOCK_PING_INTERVAL_US:
            self.last_ping_us = now_us
            self._pending_ping_t1 = now_us
            out.append(encode_message(ClockPing(t1_us=now_us)))
        return out

    # -- tick -------------------------------------------------------------

    def run_tick(self, own: SensorSample, now_us: int) -> TickOutput:
        out = tick(own, self.remote, self.phase, self.params, now_us,
                   self.site_groups, self.hold_us, self.fade_us)
        self.phase = out.phase
        if self.recorder is not None:
            self.recorder.add_local(own, now_us)
            self.recorder.add_tick(out)
        return out

    def emit_event(self, name: str, now_us: int) -> None:
        if self.recorder is not None:
            self.recorder.add_event(name, now_us)
