"""Release gate: the eight headline guarantees, one verdict line each.

Every test prints `ACCEPTANCE <name>: PASS|FAIL` so the checks can be read
off a plain pytest run, and asserts the same condition so the suite fails
loudly when a guarantee breaks.
"""

import json
import random
import time
from contextlib import contextmanager

import numpy as np
import pytest

from oracles import crc16_bitwise, ess_linkage, jacobi_eigh
from vrshake.analysis import extract_features, pca_fit, standardize, ward_linkage
from vrshake.bus import INST_PING, crc16, decode_frame, encode_frame, stuff, unstuff
from vrshake.cli import main
from vrshake.core import ContactPhase, MappingParams, stimulus_distribution
from vrshake.netsim import loopback_recording
from vrshake.profiles import HandshakeProfile, random_profile
from vrshake.recording import RecordingHeader, parse, replay


@contextmanager
def verdict(capsys, name):
    ok = False
    try:
        yield
        ok = True
    finally:
        with capsys.disabled():
            print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")


def test_emotion_map_recovery_at_desk_scale(capsys, tmp_path):
    with verdict(capsys, "map-recovery"):
        corpus = str(tmp_path / "corpus")
        t0 = time.perf_counter()
        assert main(["synth", "--seed", "42", "--out", corpus,
                     "--participants", "10"]) == 0
        assert main(["analyze", corpus, "--out", str(tmp_path / "m.hsmap"),
                     "--format", "json-lines"]) == 0
        elapsed = time.perf_counter() - t0
        lines = capsys.readouterr().out.splitlines()
        records = [json.loads(l) for l in lines if l.startswith("{")]
        clusters = [r for r in records if r.get("kind") == "cluster"]
        summary = records[-1]

        assert summary["recordings"] == 80
        assert len(clusters) == 8
        owners = {}
        for c in clusters:
            owners[c["label"]] = owners.get(c["label"], 0) + 1
        assert sorted(owners.values()) == [2, 2, 2, 2]
        assert min(c["purity"] for c in clusters) >= 0.9
        assert elapsed < 5.0, f"synth+analyze took {elapsed:.2f}s"


def test_pca_matches_eigendecomposition_oracle(capsys):
    with verdict(capsys, "pca-oracle"):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            X = rng.standard_normal((80, 5)) * rng.uniform(0.5, 4.0, size=5)
            Z, _ = standardize(X)
            model = pca_fit(Z, 3)
            cov = Z.T @ Z / (Z.shape[0] - 1)
            values, vectors = jacobi_eigh(cov)
            assert np.allclose(model.explained_variance, values[:3],
                               rtol=0, atol=1e-9)
            assert np.allclose(np.array(model.components), vectors[:, :3].T,
                               rtol=0, atol=1e-9)


def test_ward_matches_direct_ess_oracle(capsys):
    with verdict(capsys, "ward-oracle"):
        for seed in range(25):
            rng = np.random.default_rng(seed)
            X = rng.standard_normal((80, 3)) * 2.0
            merges = ward_linkage(X).merges
            heights = [m.height for m in merges]
            assert heights == sorted(heights)
            assert all(h >= 0.0 for h in heights)
            for got, (a, b, delta, size) in zip(merges, ess_linkage(X)):
                assert (got.left, got.right, got.size) == (a, b, size)
                assert got.height == pytest.approx(delta, abs=1e-9)


def test_record_replay_determinism_over_scripted_counterparts(capsys, tmp_path):
    with verdict(capsys, "determinism"):
        for seed in range(20):
            rng = random.Random(seed)
            rec, _ = loopback_recording(random_profile(rng), random_profile(rng),
                                        RecordingHeader(participant=f"p{seed:02d}"),
                                        media_event=seed % 2 == 0)
            path = tmp_path / f"run{seed}.hsrec"
            rec.save(str(path))
            text = path.read_text()
            loaded = parse(text)
            assert loaded.serialize() == text
            report = replay(loaded)
            assert report.matches and not report.mismatches
            assert len(report.stored) > 0
            assert report.recomputed == report.stored


def test_protocol_robustness_under_loss_and_jitter(capsys):
    with verdict(capsys, "protocol-robustness"):
        assert main(["simulate-net", "--duration", "60", "--loss", "0.1",
                     "--jitter", "50±20ms", "--seed", "7", "--silence-at", "55",
                     "--profile", "steady", "--counterpart", "steady",
                     "--format", "json-lines"]) == 0
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert summary["ticks"] == 6000
        assert summary["decode_errors"] == 0
        assert summary["stale_fraction"] < 0.05
        assert summary["zeros_within_ms"] is not None
        assert summary["zeros_within_ms"] <= 500.0


def test_mapping_law_over_random_grip_pairs(capsys):
    with verdict(capsys, "mapping-law"):
        params = MappingParams()
        fingers, palms = range(0, 5), range(5, 7)
        rng = random.Random(99)
        for _ in range(100_000):
            own_lo, own_hi = sorted((rng.random(), rng.random()))
            opp_lo, opp_hi = sorted((rng.random(), rng.random()))
            base = stimulus_distribution(own_lo, opp_lo, ContactPhase.CLASPED,
                                         params).intensity
            own_up = stimulus_distribution(own_hi, opp_lo, ContactPhase.CLASPED,
                                           params).intensity
            opp_up = stimulus_distribution(own_lo, opp_hi, ContactPhase.CLASPED,
                                           params).intensity
            for vec in (base, own_up, opp_up):
                assert all(0.0 <= v <= 1.0 for v in vec)
            for i in palms:
                assert own_up[i] == base[i]
                assert opp_up[i] >= base[i]
            for i in fingers:
                assert opp_up[i] == base[i]
                assert own_up[i] >= base[i]


def test_bus_codec_round_trip_crc_and_stuffing(capsys):
    with verdict(capsys, "bus-codec"):
        rng = random.Random(1234)
        for _ in range(10_000):
            motor = rng.randrange(0, 253)
            instruction = rng.randrange(0, 256)
            payload = rng.randbytes(rng.randrange(0, 24))
            frame = encode_frame(motor, instruction, payload)
            assert decode_frame(frame) == (motor, instruction, payload)

        for _ in range(10_000):
            data = rng.randbytes(rng.randrange(0, 64))
            assert crc16(data) == crc16_bitwise(data)

        adversarial = [
            b"\xff\xff\xfd", b"\xff\xff\xfd\x00", b"\xff\xff\xfd" * 5,
            b"\xff" * 7, b"\xff\xff\xfc\xfd\xff\xff\xfd",
            b"\xfd\xff\xff\xfd\xff\xff", b"\x00\xff\xff\xfd\x00\xff\xff\xfd\x01",
        ]
        for body in adversarial:
            assert unstuff(stuff(body)) == body
            frame = encode_frame(7, 0x03, body)
            assert decode_frame(frame) == (7, 0x03, body)

        known_ping = bytes.fromhex("fffffd0001030001194e")
        assert encode_frame(1, INST_PING, b"") == known_ping
        assert decode_frame(known_ping) == (1, INST_PING, b"")


def test_feature_extraction_matches_closed_forms(capsys):
    with verdict(capsys, "feature-analytic"):
        profile = HandshakeProfile(lead_s=0.5, rise_s=0.5, hold_s=2.0,
                                   fall_s=0.5, grip_peak=1.0,
                                   swing_amp_mm=50.0, swing_freq_hz=2.0,
                                   swing_axis=(1.0, 0.0, 0.0))
        rec, _ = loopback_recording(profile, profile, RecordingHeader(),
                                    duration_s=profile.total_s + 0.5)
        feats = extract_features(rec)
        assert feats.grip_strength == pytest.approx(1.0, abs=0.01)
        assert feats.grip_speed == pytest.approx(2.0, abs=0.1)
        assert feats.swing_range == pytest.approx(0.10, abs=0.002)
        assert feats.swing_speed == pytest.approx(0.40, abs=0.01)
