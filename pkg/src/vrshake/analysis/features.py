"""The five handshake elements, computed from one recorded clasp episode.

Definitions (simplest consistent with each element's name):
  grip_strength  peak own grip over the clasp interval
  grip_speed     max forward-difference derivative of own grip after a
                 5-sample moving-average smooth, 1/s
  swing_range    peak-to-peak wrist travel projected on the axis of
                 maximum position variance during the clasp, meters
  swing_speed    mean absolute projected wrist velocity, m/s
  duration       clasp-to-release time from the contact phase machine, s
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ContactPhase
from ..recording import LocalRecord, SessionRecording, StimulusRecord

FEATURE_NAMES = ("grip_strength", "grip_speed", "swing_range", "swing_speed", "duration")
MIN_EPISODE_SAMPLES = 10


class SegmentationError(ValueError):
    """Recording does not contain exactly one complete clasp episode."""


class InsufficientDataError(ValueError):
    """Clasp episode too short to measure."""


@dataclass(frozen=True)
class HandshakeFeatures:
    grip_strength: float   # unitless, [0, 1]
    grip_speed: float      # 1/s
    swing_range: float     # m
    swing_speed: float     # m/s
    duration: float        # s

    def as_vector(self) -> np.ndarray:
        return np.array([self.grip_strength, self.grip_speed, self.swing_range,
                         self.swing_speed, self.duration], dtype=float)


def clasp_episodes(stims: list[StimulusRecord]) -> list[tuple[int, int]]:
    """Complete (t_clasp, t_release) intervals in tick-trace order."""
    episodes = []
    start: int | None = None
    prev = ContactPhase.IDLE
    for record in stims:
        if record.phase is ContactPhase.CLASPED and prev is not ContactPhase.CLASPED:
            start = record.t_us
        elif record.phase is ContactPhase.RELEASED and start is not None:
            episodes.append((start, record.t_us))
            start = None
        prev = record.phase
    return episodes


def moving_average(values: np.ndarray, window: int = 5) -> np.ndarray:
    """Centered moving average with truncated edges."""
    half = window // 2
    out = np.empty_like(values, dtype=float)
    for i in range(len(values)):
        lo = max(0, i - half)
        out[i] = values[lo:i + half + 1].mean()
    return out


def extract_features(rec: SessionRecording) -> HandshakeFeatures:
    stims = rec.stimulus_trace()
    episodes = clasp_episodes(stims)
    if len(episodes) != 1:
        raise SegmentationError(
            f"expected exactly one clasp episode, found {len(episodes)}")
    t_clasp, t_release = episodes[0]

    in_episode = [s for s in stims
                  if t_clasp <= s.t_us < t_release and s.phase is ContactPhase.CLASPED]
    if len(in_episode) < MIN_EPISODE_SAMPLES:
        raise InsufficientDataError(
            f"clasp interval has {len(in_episode)} samples, need {MIN_EPISODE_SAMPLES}")

    t = np.array([s.t_us for s in in_episode], dtype=float) / 1e6
    grip = np.array([s.own_milli for s in in_episode], dtype=float) / 1000.0

    grip_strength = float(grip.max())
    smoothed = moving_average(grip, 5)
    grip_speed = float((np.diff(smoothed) / np.diff(t)).max())

    wrist = np.array(
        [r.sample.wrist_mm for r in rec.records
         if isinstance(r, LocalRecord) and t_clasp <= r.t_us < t_release],
        dtype=float) / 1000.0
    wrist_t = np.array(
        [r.t_us for r in rec.records
         if isinstance(r, LocalRecord) and t_clasp <= r.t_us < t_release],
        dtype=float) / 1e6
    if len(wrist) < 2:
        raise InsufficientDataError("too few wrist samples in clasp interval")

    centered = wrist - wrist.mean(axis=0)
    cov = centered.T @ centered / (len(wrist) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    axis = eigvecs[:, -1]  # direction of maximum variance
    projected = centered @ axis
    swing_range = float(projected.max() - projected.min())
    swing_speed = float(np.mean(np.abs(np.diff(projected) / np.diff(wrist_t))))

    return HandshakeFeatures(
        grip_strength=grip_strength,
        grip_speed=grip_speed,
        swing_range=swing_range,
        swing_speed=swing_speed,
        duration=(t_release - t_clasp) / 1e6,
    )
