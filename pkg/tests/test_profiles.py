"""Scripted handshake trajectories."""

import math
import random

import pytest

from vrshake.profiles import HandshakeProfile, random_profile, steady_profile


def test_grip_trapezoid_piecewise_values():
    p = HandshakeProfile(lead_s=0.2, rise_s=0.5, hold_s=2.0, fall_s=0.5,
                         tail_s=0.3, grip_peak=0.8)
    assert p.grip_at(0.0) == 0.0
    assert p.grip_at(0.19) == 0.0
    assert p.grip_at(0.2 + 0.25) == pytest.approx(0.4)    # halfway up the ramp
    assert p.grip_at(0.7) == pytest.approx(0.8)
    assert p.grip_at(1.5) == pytest.approx(0.8)           # plateau
    assert p.grip_at(2.7 + 0.25) == pytest.approx(0.4)    # halfway down
    assert p.grip_at(3.2) == 0.0
    assert p.grip_at(99.0) == 0.0
    assert p.total_s == pytest.approx(3.5)


def test_wrist_sinusoid_along_axis():
    p = HandshakeProfile(swing_amp_mm=50.0, swing_freq_hz=2.0,
                         swing_axis=(0.0, 1.0, 0.0), base_mm=(10, 20, 30))
    assert p.wrist_at(0.0) == (10, 20, 30)
    assert p.wrist_at(0.125) == (10, 70, 30)     # quarter period, peak amplitude
    assert p.wrist_at(0.375) == (10, -30, 30)    # three quarters, trough
    assert p.wrist_at(0.5) == (10, 20, 30)


def test_wrist_projection_rounds_to_millimeters():
    p = HandshakeProfile(swing_amp_mm=10.0, swing_freq_hz=1.0,
                         swing_axis=(math.cos(0.7), 0.0, math.sin(0.7)))
    x, y, z = p.wrist_at(0.25)
    assert (x, y, z) == (round(10 * math.cos(0.7)), 0, round(10 * math.sin(0.7)))


def test_reading_combines_grip_and_wrist():
    p = HandshakeProfile()
    r = p.reading_at(1.0)
    assert r.grip == p.grip_at(1.0)
    assert r.wrist_mm == p.wrist_at(1.0)


def test_validation_rejects_bad_parameters():
    with pytest.raises(ValueError):
        HandshakeProfile(rise_s=-0.1)
    with pytest.raises(ValueError):
        HandshakeProfile(grip_peak=1.5)
    with pytest.raises(ValueError):
        HandshakeProfile(swing_amp_mm=-1.0)
    with pytest.raises(ValueError):
        HandshakeProfile(swing_freq_hz=-2.0)


def test_random_profile_is_feasible_and_seed_stable():
    a = random_profile(random.Random(7))
    b = random_profile(random.Random(7))
    assert a == b
    for seed in range(30):
        p = random_profile(random.Random(seed))
        assert 0.4 <= p.grip_peak <= 1.0
        assert p.total_s > 1.0


def test_steady_profile_spans_requested_duration():
    p = steady_profile(10.0, grip=0.6)
    assert p.total_s == pytest.approx(10.0)
    assert p.grip_peak == 0.6
    assert p.grip_at(5.0) == 0.6
    short = steady_profile(1.0)
    assert short.hold_s == 0.0
