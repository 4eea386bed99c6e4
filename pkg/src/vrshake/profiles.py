"""Scripted grip/swing trajectories that stand in for a human party.

A profile is a trapezoid grip episode (lead-in, linear rise, plateau,
linear fall, tail) with a sinusoidal wrist swing along one axis.  The
loopback session, the impairment harness and the synthetic dataset all
drive peers from these.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .session import SensorReading


@dataclass(frozen=True)
class HandshakeProfile:
    lead_s: float = 0.2        # idle time before the grip ramp
    rise_s: float = 0.5        # 0 -> grip_peak, linear
    hold_s: float = 2.0        # plateau
    fall_s: float = 0.5        # grip_peak -> 0, linear
    tail_s: float = 0.3        # idle time after release
    grip_peak: float = 1.0
    swing_amp_mm: float = 50.0 # sinusoid amplitude along swing_axis
    swing_freq_hz: float = 2.0
    swing_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    base_mm: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self) -> None:
        if min(self.lead_s, self.rise_s, self.hold_s, self.fall_s, self.tail_s) < 0:
            raise ValueError("profile durations must be non-negative")
        if not 0.0 <= self.grip_peak <= 1.0:
            raise ValueError("grip_peak outside [0, 1]")
        if self.swing_amp_mm < 0 or self.swing_freq_hz < 0:
            raise ValueError("swing parameters must be non-negative")

    @property
    def total_s(self) -> float:
        return self.lead_s + self.rise_s + self.hold_s + self.fall_s + self.tail_s

    def grip_at(self, t_s: float) -> float:
        t = t_s - self.lead_s
        if t < 0:
            return 0.0
        if t < self.rise_s:
            return self.grip_peak * t / self.rise_s
        t -= self.rise_s
        if t < self.hold_s:
            return self.grip_peak
        t -= self.hold_s
        if t < self.fall_s:
            return self.grip_peak * (1.0 - t / self.fall_s)
        return 0.0

    def wrist_at(self, t_s: float) -> tuple[int, int, int]:
        swing = self.swing_amp_mm * math.sin(2.0 * math.pi * self.swing_freq_hz * t_s)
        return (
            self.base_mm[0] + round(self.swing_axis[0] * swing),
            self.base_mm[1] + round(self.swing_axis[1] * swing),
            self.base_mm[2] + round(self.swing_axis[2] * swing),
        )

    def reading_at(self, t_s: float) -> SensorReading:
        return SensorReading(grip=self.grip_at(t_s), wrist_mm=self.wrist_at(t_s))


def random_profile(rng: random.Random) -> HandshakeProfile:
    """A feasible randomized profile (always produces one clasp episode)."""
    return HandshakeProfile(
        lead_s=rng.uniform(0.1, 0.5),
        rise_s=rng.uniform(0.2, 0.8),
        hold_s=rng.uniform(0.5, 2.5),
        fall_s=rng.uniform(0.2, 0.8),
        tail_s=rng.uniform(0.2, 0.5),
        grip_peak=rng.uniform(0.4, 1.0),
        swing_amp_mm=rng.uniform(5.0, 120.0),
        swing_freq_hz=rng.uniform(0.5, 3.0),
    )


def steady_profile(duration_s: float, grip: float = 0.9) -> HandshakeProfile:
    """Clasp quickly and hold for most of the given duration."""
    hold = max(0.0, duration_s - 1.5)
    return HandshakeProfile(lead_s=0.2, rise_s=0.3, hold_s=hold, fall_s=0.5,
                            tail_s=0.5, grip_peak=grip, swing_amp_mm=40.0,
                            swing_freq_hz=1.5)
