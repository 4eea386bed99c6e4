"""Wall-clock UDP session loop.

Drives one SessionEngine at a fixed tick rate against a real peer.  All
engine timestamps are microseconds since loop start, so recordings made here
replay exactly like simulated ones.  The peer address may be pinned up front
or learned from the first datagram received (listener mode).
"""

from __future__ import annotations

import socket
import time
from dataclasses import dataclass

from .profiles import HandshakeProfile
from .session import SessionEngine, TickOutput


@dataclass
class LiveSummary:
    ticks: int = 0
    stale_ticks: int = 0
    clasped_ticks: int = 0
    decode_errors: int = 0
    drops: int = 0
    peer_seen: bool = False

    @property
    def stale_fraction(self) -> float:
        return self.stale_ticks / self.ticks if self.ticks else 0.0


def run_udp_session(
    engine: SessionEngine,
    profile: HandshakeProfile,
    listen_port: int = 0,
    peer: tuple[str, int] | None = None,
    duration_s: float = 10.0,
    rate_hz: int = 100,
    sink=None,
    on_tick=None,
) -> LiveSummary:
    """Run the tick loop for duration_s; returns counters for the summary line.

    sink, when given, is called with every TickOutput (actuator path);
    on_tick likewise (observers).  Ctrl-C ends the session cleanly.
    """
    period_ns = round(1_000_000_000 / rate_hz)
    summary = LiveSummary()
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    try:
        sock.bind(("0.0.0.0", listen_port))
        sock.setblocking(False)
        t0_ns = time.monotonic_ns()
        steps = int(duration_s * rate_hz)
        try:
            for k in range(steps):
                target_ns = t0_ns + k * period_ns
                delay = target_ns - time.monotonic_ns()
                if delay > 0:
                    time.sleep(delay / 1e9)
                now_us = (time.monotonic_ns() - t0_ns) // 1000

                while True:
                    try:
                        data, sender = sock.recvfrom(2048)
                    except BlockingIOError:
                        break
                    except OSError:
                        break
                    summary.peer_seen = True
                    if peer is None:
                        peer = sender
                    for reply in engine.handle_datagram(data, now_us):
                        sock.sendto(reply, sender)

                reading = profile.reading_at(now_us / 1e6)
                sample = engine.make_own_sample(reading, now_us)
                if peer is not None:
                    for datagram in engine.outbound(sample, now_us):
                        sock.sendto(datagram, peer)
                out: TickOutput = engine.run_tick(sample, now_us)
                summary.ticks += 1
                summary.stale_ticks += out.stale
                summary.clasped_ticks += out.phase.value == "Clasped"
                if sink is not None:
                    sink(out)
                if on_tick is not None:
                    on_tick(out)
        except KeyboardInterrupt:
            pass
    finally:
        sock.close()
    summary.decode_errors = engine.decode_errors
    summary.drops = engine.remote.drops
    return summary
