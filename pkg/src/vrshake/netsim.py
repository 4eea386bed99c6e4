"""Virtual-clock two-peer harness with datagram loss and jitter.

Runs both session engines on one deterministic timeline: per step,
queued datagrams whose delivery time has come are handed to their
destination engine, then each peer samples its profile, ticks, and
sends.  With a fixed seed the whole run (including every recording
byte) is reproducible, which is what the determinism and robustness
checks lean on.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field

from .core import GripCalibration, MappingParams
from .profiles import HandshakeProfile
from .recording import Recorder, RecordingHeader, SessionRecording
from .session import SessionEngine, TickOutput
from .wire import Hello, encode_message

TICK_RATE_HZ = 100


@dataclass(frozen=True)
class Impairment:
    """Per-datagram loss and normally distributed delay."""

    loss: float = 0.0          # drop probability in [0, 1)
    delay_mean_ms: float = 0.0
    delay_dev_ms: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.loss < 1.0:
            raise ValueError("loss must be in [0, 1)")
        if self.delay_mean_ms < 0 or self.delay_dev_ms < 0:
            raise ValueError("delays must be non-negative")


@dataclass
class SimReport:
    """Aggregates of one simulated session, from peer A's perspective."""

    ticks: int = 0
    stale_ticks: int = 0             # over the whole run
    stale_ticks_active: int = 0      # while the peer was still sending
    active_ticks: int = 0
    decode_errors: int = 0
    ingest_drops: int = 0
    sent: int = 0
    lost: int = 0
    delivered: int = 0
    silence_at_us: int | None = None
    last_receipt_us: int | None = None  # last datagram delivered to A
    zeros_within_us: int | None = None  # last receipt -> final all-zero output
    ticks_a: list[TickOutput] = field(default_factory=list)

    @property
    def stale_fraction(self) -> float:
        return self.stale_ticks / self.ticks if self.ticks else 0.0

    @property
    def stale_fraction_active(self) -> float:
        return self.stale_ticks_active / self.active_ticks if self.active_ticks else 0.0


class _Channel:
    """Impaired datagram path; delivery order is (time, send order)."""

    def __init__(self, impairment: Impairment | None, rng: random.Random):
        self.impairment = impairment
        self.rng = rng
        self.queue: list[tuple[int, int, str, bytes]] = []
        self._counter = 0
        self.sent = 0
        self.lost = 0

    def send(self, data: bytes, dest: str, now_us: int) -> None:
        self.sent += 1
        delay_us = 0
        if self.impairment is not None:
            if self.rng.random() < self.impairment.loss:
                self.lost += 1
                return
            delay_ms = self.rng.gauss(self.impairment.delay_mean_ms,
                                      self.impairment.delay_dev_ms)
            delay_us = max(0, int(delay_ms * 1000))
        self._counter += 1
        heapq.heappush(self.queue, (now_us + delay_us, self._counter, dest, data))

    def due(self, now_us: int):
        while self.queue and self.queue[0][0] <= now_us:
            _, _, dest, data = heapq.heappop(self.queue)
            yield dest, data


def run_session(
    profile_a: HandshakeProfile,
    profile_b: HandshakeProfile,
    duration_s: float,
    rate_hz: int = TICK_RATE_HZ,
    impairment: Impairment | None = None,
    params: MappingParams | None = None,
    calibration: GripCalibration | None = None,
    recording: SessionRecording | None = None,
    b_silence_at_s: float | None = None,
    collect_ticks: bool = False,
    media_event: bool = False,
) -> SimReport:
    """Simulate a full two-peer session; peer A is the observed/recorded side."""
    period_us = round(1_000_000 / rate_hz)
    steps = int(duration_s * rate_hz)
    silence_us = None if b_silence_at_s is None else int(b_silence_at_s * 1_000_000)

    rng = random.Random(impairment.seed if impairment is not None else 0)
    channel = _Channel(impairment, rng)
    recorder = Recorder(recording) if recording is not None else None
    engine_a = SessionEngine(params=params, calibration=calibration,
                             peer_id=1, recorder=recorder)
    engine_b = SessionEngine(params=params, calibration=calibration, peer_id=2)
    engines = {"a": engine_a, "b": engine_b}

    report = SimReport(silence_at_us=silence_us)
    if media_event:
        engine_a.emit_event("media_start", 0)
    last_nonzero_after_silence: int | None = None
    channel.send(encode_message(Hello(peer_id=1)), "b", 0)
    channel.send(encode_message(Hello(peer_id=2)), "a", 0)

    for k in range(steps):
        now = k * period_us
        b_active = silence_us is None or now < silence_us

        for dest, data in channel.due(now):
            replies = engines[dest].handle_datagram(data, now)
            if dest == "a":
                report.last_receipt_us = now
            if dest == "b" and not b_active:
                continue  # an abruptly silent peer stops replying too
            for reply in replies:
                channel.send(reply, "a" if dest == "b" else "b", now)

        reading_a = profile_a.reading_at(now / 1e6)
        sample_a = engine_a.make_own_sample(reading_a, now)
        out_a = engine_a.run_tick(sample_a, now)
        for datagram in engine_a.outbound(sample_a, now):
            channel.send(datagram, "b", now)

        if b_active:
            reading_b = profile_b.reading_at(now / 1e6)
            sample_b = engine_b.make_own_sample(reading_b, now)
            engine_b.run_tick(sample_b, now)
            for datagram in engine_b.outbound(sample_b, now):
                channel.send(datagram, "a", now)

        report.ticks += 1
        if out_a.stale:
            report.stale_ticks += 1
        if b_active:
            report.active_ticks += 1
            if out_a.stale:
                report.stale_ticks_active += 1
        if silence_us is not None and now >= silence_us and any(out_a.dist.intensity):
            last_nonzero_after_silence = now
        if collect_ticks:
            report.ticks_a.append(out_a)

    report.decode_errors = engine_a.decode_errors + engine_b.decode_errors
    report.ingest_drops = engine_a.remote.drops
    report.sent = channel.sent
    report.lost = channel.lost
    report.delivered = channel.sent - channel.lost - len(channel.queue)
    if silence_us is not None:
        if last_nonzero_after_silence is None:
            report.zeros_within_us = 0
        else:
            # Bound is measured from the last datagram A actually received;
            # in-flight transit after the peer stops sending does not count.
            since = report.last_receipt_us if report.last_receipt_us is not None else silence_us
            report.zeros_within_us = max(0, last_nonzero_after_silence + period_us - since)
    return report


def loopback_recording(
    profile_a: HandshakeProfile,
    profile_b: HandshakeProfile,
    header: RecordingHeader,
    duration_s: float | None = None,
    rate_hz: int = TICK_RATE_HZ,
    impairment: Impairment | None = None,
    media_event: bool = False,
) -> tuple[SessionRecording, SimReport]:
    """Run a scripted loopback session and return its recording."""
    if duration_s is None:
        duration_s = max(profile_a.total_s, profile_b.total_s)
    recording = SessionRecording(header)
    report = run_session(profile_a, profile_b, duration_s, rate_hz=rate_hz,
                         impairment=impairment, params=header.params,
                         calibration=header.calibration, recording=recording,
                         media_event=media_event)
    return recording, report
