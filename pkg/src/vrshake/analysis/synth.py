"""Synthetic labeled handshake corpus.

Ten participants, four emotion labels, two trials each: 80 recordings.
Each (emotion, trial-slot) pair has a style mode: target values for the five
elements, jittered per trial with clipped Gaussian noise.  A trapezoid grip
and sinusoidal wrist profile is derived per draw so that feature extraction
recovers the targets, then both peers of a loopback session play it.

Derivation notes (contact thresholds on/off, one-tick mirror delay):
  clasp starts  ~ lead + tick + rise * on/peak
  release at    ~ lead + rise + hold + fall * (1 - off/peak)
so  hold = duration - rise*(1 - on/peak) - fall*(1 - off/peak) + tick.
The swing period must fit inside the clasp or the projected peak-to-peak
undershoots 2A; mode tables keep period <= 0.9 * duration for every draw
within the +-2.5 sigma clip.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path

from ..core import GripCalibration, MappingParams
from ..netsim import loopback_recording
from ..profiles import HandshakeProfile
from ..recording import EMOTIONS, RecordingHeader, SessionRecording

TICK_S = 0.01


class InfeasibleFeaturesError(ValueError):
    """No trapezoid profile can realize the requested element values."""


@dataclass(frozen=True)
class ModeSpec:
    emotion: str
    # Feature order: grip_strength, grip_speed, swing_range, swing_speed, duration.
    means: tuple[float, float, float, float, float]
    sigmas: tuple[float, float, float, float, float]


_SIGMAS = (0.02, 0.08, 0.004, 0.015, 0.05)

DEFAULT_MODES: tuple[ModeSpec, ...] = (
    ModeSpec("Angry",   (0.95, 4.0, 0.20, 0.80, 1.2), _SIGMAS),
    ModeSpec("Angry",   (0.90, 3.0, 0.06, 0.30, 1.0), _SIGMAS),
    ModeSpec("Happy",   (0.70, 2.0, 0.16, 0.50, 2.4), _SIGMAS),
    ModeSpec("Happy",   (0.55, 1.5, 0.22, 0.35, 1.8), _SIGMAS),
    ModeSpec("Relaxed", (0.45, 0.8, 0.08, 0.15, 2.2), _SIGMAS),
    ModeSpec("Relaxed", (0.35, 0.5, 0.12, 0.10, 3.0), _SIGMAS),
    ModeSpec("Sad",     (0.30, 0.4, 0.03, 0.12, 1.6), _SIGMAS),
    ModeSpec("Sad",     (0.35, 0.6, 0.02, 0.10, 1.2), _SIGMAS),
)


def profile_for_features(grip_strength: float, grip_speed: float, swing_range: float,
                         swing_speed: float, duration: float,
                         params: MappingParams | None = None,
                         swing_axis: tuple[float, float, float] = (1.0, 0.0, 0.0),
                         ) -> HandshakeProfile:
    """Trapezoid-and-sine profile whose extracted elements match the targets."""
    params = params or MappingParams()
    if grip_speed <= 0 or duration <= 0:
        raise InfeasibleFeaturesError("grip_speed and duration must be positive")
    if swing_range < 0 or swing_speed < 0:
        raise InfeasibleFeaturesError("swing values must be non-negative")
    peak = round(min(max(grip_strength, 0.25), 1.0), 3)   # milli grid, > contact_on
    if peak <= params.contact_on:
        raise InfeasibleFeaturesError("grip peak does not reach the contact threshold")
    rise = peak / grip_speed
    fall = rise
    amp_mm = round(swing_range / 2 * 1000)
    amp_m = amp_mm / 1000.0
    # mean |d/dt A sin(wt)| over a period is 2Aw/pi = 4Af
    freq = swing_speed / (4 * amp_m) if amp_mm > 0 else 0.0
    hold = (duration - rise * (1 - params.contact_on / peak)
            - fall * (1 - params.contact_off / peak) + TICK_S)
    if hold < 0.05:
        raise InfeasibleFeaturesError(
            f"duration {duration:.3f}s too short for grip speed {grip_speed:.3f}/s")
    return HandshakeProfile(lead_s=0.2, rise_s=rise, hold_s=hold, fall_s=fall,
                            tail_s=0.3, grip_peak=peak, swing_amp_mm=float(amp_mm),
                            swing_freq_hz=freq, swing_axis=swing_axis)


def _clipped_gauss(rng: random.Random, mean: float, sigma: float) -> float:
    value = rng.gauss(mean, sigma)
    return min(max(value, mean - 2.5 * sigma), mean + 2.5 * sigma)


def _participant_axis(index: int, count: int) -> tuple[float, float, float]:
    angle = math.pi * index / (2 * max(count, 1))   # fan from x toward z
    return (math.cos(angle), 0.0, math.sin(angle))


def synth_dataset(seed: int, participants: int = 10, trials: int = 2,
                  modes: tuple[ModeSpec, ...] = DEFAULT_MODES,
                  rate_hz: int = 100,
                  params: MappingParams | None = None,
                  calibration: GripCalibration | None = None,
                  ) -> list[SessionRecording]:
    """Deterministic corpus: participants x emotions x trials recordings."""
    params = params or MappingParams()
    calibration = calibration or GripCalibration()
    by_emotion: dict[str, list[ModeSpec]] = {}
    for mode in modes:
        by_emotion.setdefault(mode.emotion, []).append(mode)
    for emotion in EMOTIONS:
        if len(by_emotion.get(emotion, ())) < trials:
            raise InfeasibleFeaturesError(
                f"need {trials} modes for {emotion}, have {len(by_emotion.get(emotion, ()))}")

    rng = random.Random(seed)
    recordings = []
    for p in range(participants):
        axis = _participant_axis(p, participants)
        for emotion in EMOTIONS:
            for trial in range(trials):
                mode = by_emotion[emotion][trial]
                draw = [_clipped_gauss(rng, m, s) for m, s in zip(mode.means, mode.sigmas)]
                profile = profile_for_features(*draw, params=params, swing_axis=axis)
                header = RecordingHeader(
                    participant=f"p{p + 1:02d}", label=emotion,
                    calibration=calibration, params=params)
                rec, _ = loopback_recording(profile, profile, header, rate_hz=rate_hz)
                recordings.append(rec)
    return recordings


def dataset_filename(rec: SessionRecording, trial: int) -> str:
    return f"{rec.header.participant}_{rec.header.label}_t{trial}.hsrec"


def write_dataset(recordings: list[SessionRecording], out_dir, trials: int = 2) -> list[Path]:
    """Save with participant/label/trial names; returns paths in written order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, rec in enumerate(recordings):
        path = out / dataset_filename(rec, trial=i % trials + 1)
        rec.save(path)
        paths.append(path)
    return paths
