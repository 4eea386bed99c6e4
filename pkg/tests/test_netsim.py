"""Virtual-clock loopback harness: determinism, impairment, liveness."""

import pytest

from vrshake.core import ContactPhase
from vrshake.netsim import Impairment, loopback_recording, run_session
from vrshake.profiles import HandshakeProfile, steady_profile
from vrshake.recording import RecordingHeader, replay


def test_impairment_validation():
    Impairment(loss=0.0)
    Impairment(loss=0.99, delay_mean_ms=200.0, delay_dev_ms=80.0)
    with pytest.raises(ValueError):
        Impairment(loss=1.0)
    with pytest.raises(ValueError):
        Impairment(loss=-0.1)
    with pytest.raises(ValueError):
        Impairment(delay_mean_ms=-1.0)
    with pytest.raises(ValueError):
        Impairment(delay_dev_ms=-1.0)


def test_clean_channel_runs_fresh_and_clasps():
    report = run_session(HandshakeProfile(), HandshakeProfile(), duration_s=3.5,
                         collect_ticks=True)
    assert report.ticks == 350
    assert report.decode_errors == 0
    assert report.ingest_drops == 0
    assert report.lost == 0
    # Only the first tick predates any received peer sample.
    assert report.stale_ticks <= 1
    assert any(t.phase is ContactPhase.CLASPED for t in report.ticks_a)
    assert report.ticks_a[-1].phase is ContactPhase.IDLE


def test_datagram_accounting_balances():
    impairment = Impairment(loss=0.25, delay_mean_ms=40.0, delay_dev_ms=20.0, seed=5)
    report = run_session(HandshakeProfile(), HandshakeProfile(), duration_s=3.0,
                         impairment=impairment)
    assert report.lost > 0
    assert report.delivered > 0
    in_flight = report.sent - report.lost - report.delivered
    assert 0 <= in_flight < 20  # at most the last few ticks' datagrams


def test_same_seed_reproduces_every_byte():
    header = RecordingHeader(participant="p01")
    impairment = Impairment(loss=0.2, delay_mean_ms=50.0, delay_dev_ms=20.0, seed=42)
    first, rep1 = loopback_recording(HandshakeProfile(), steady_profile(3.5), header,
                                     impairment=impairment)
    second, rep2 = loopback_recording(HandshakeProfile(), steady_profile(3.5), header,
                                      impairment=impairment)
    assert first.serialize() == second.serialize()
    assert rep1 == rep2


def test_different_seed_changes_the_loss_pattern():
    header = RecordingHeader()
    impairment = {"loss": 0.3, "delay_mean_ms": 50.0, "delay_dev_ms": 20.0}
    a, _ = loopback_recording(HandshakeProfile(), HandshakeProfile(), header,
                              impairment=Impairment(seed=1, **impairment))
    b, _ = loopback_recording(HandshakeProfile(), HandshakeProfile(), header,
                              impairment=Impairment(seed=2, **impairment))
    assert a.serialize() != b.serialize()


def test_impaired_recording_still_replays_exactly():
    header = RecordingHeader()
    impairment = Impairment(loss=0.3, delay_mean_ms=60.0, delay_dev_ms=30.0, seed=9)
    rec, _ = loopback_recording(HandshakeProfile(), HandshakeProfile(), header,
                                impairment=impairment)
    assert replay(rec).matches


def test_moderate_impairment_keeps_playout_fresh():
    impairment = Impairment(loss=0.1, delay_mean_ms=50.0, delay_dev_ms=20.0, seed=3)
    report = run_session(steady_profile(10.0), steady_profile(10.0), duration_s=10.0,
                         impairment=impairment)
    assert report.decode_errors == 0
    assert report.stale_fraction_active < 0.05


def test_abrupt_silence_decays_to_zero_within_bound():
    report = run_session(steady_profile(6.0), steady_profile(6.0), duration_s=6.0,
                         b_silence_at_s=3.0, collect_ticks=True)
    assert report.silence_at_us == 3_000_000
    assert report.zeros_within_us is not None
    assert report.zeros_within_us <= 500_000
    last = report.ticks_a[-1]
    assert last.stale and all(v == 0.0 for v in last.dist.intensity)


def test_silence_bound_holds_under_loss_and_jitter():
    for seed in range(5):
        impairment = Impairment(loss=0.1, delay_mean_ms=50.0, delay_dev_ms=20.0, seed=seed)
        report = run_session(steady_profile(6.0), steady_profile(6.0), duration_s=6.0,
                             impairment=impairment, b_silence_at_s=3.0)
        assert report.zeros_within_us is not None and report.zeros_within_us <= 500_000


def test_alternate_tick_rate():
    report = run_session(HandshakeProfile(), HandshakeProfile(), duration_s=2.0,
                         rate_hz=200)
    assert report.ticks == 400


def test_loopback_recording_defaults_and_media_event():
    header = RecordingHeader(participant="p02", label="Relaxed")
    profile = HandshakeProfile()
    rec, report = loopback_recording(profile, profile, header, media_event=True)
    assert report.ticks == int(profile.total_s * 100)
    events = rec.events()
    assert [e.name for e in events] == ["media_start"] and events[0].t_us == 0
    assert len(rec.stimulus_trace()) == report.ticks
