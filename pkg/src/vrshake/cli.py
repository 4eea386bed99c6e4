"""Command-line front end.

Commands: session, replay, synth, analyze, classify, simulate-net, serve.
Exit codes: 0 success, 1 usage error (bad flags, missing extras),
2 data error (malformed or infeasible inputs).  `--format json-lines`
switches machine-readable output: one JSON object per line, each with a
"kind" field; human mode prints the same information as text.

The config file (key=value lines) is taken from --config or the
VRSHAKE_CONFIG environment variable; it can override calibration, mapping
parameters, site groups, and bus channel wiring.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
import random
from pathlib import Path

from . import __version__
from .bus import FrameCapture, SimDevice, channels_from_config, default_channels, schedule
from .core import (
    DEFAULT_SITE_GROUPS,
    GripCalibration,
    HandshakeConfig,
    MappingParams,
    StimulusDistribution,
    load_config,
)
from .netsim import Impairment, loopback_recording, run_session
from .profiles import HandshakeProfile, random_profile, steady_profile
from .recording import (
    EMOTIONS,
    RecordingHeader,
    SessionRecording,
    load,
    replay,
)
from .session import SessionEngine
from .livenet import run_udp_session
from .recording import Recorder

CONFIG_ENV_VAR = "VRSHAKE_CONFIG"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(args, record: dict) -> None:
    if args.format == "json-lines":
        print(json.dumps(record, sort_keys=True))
    else:
        kind = record.pop("kind", "info")
        body = "  ".join(f"{k}={v}" for k, v in record.items())
        print(f"[{kind}] {body}")


def _load_cfg(args) -> HandshakeConfig | None:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return None
    return load_config(path)


def _cfg_parts(cfg: HandshakeConfig | None):
    if cfg is None:
        return None, None, None, default_channels()
    return cfg.calibration, cfg.params, cfg.site_groups, channels_from_config(cfg.raw)


_PROFILE_KEYS = {
    "grip": "grip_peak", "lead": "lead_s", "rise": "rise_s", "hold": "hold_s",
    "fall": "fall_s", "tail": "tail_s", "amp": "swing_amp_mm", "freq": "swing_freq_hz",
}


def parse_profile_spec(spec: str, rng: random.Random, duration_hint: float) -> HandshakeProfile:
    """Profile from 'steady', 'random', or 'key=value,...' (see _PROFILE_KEYS, axis=x:y:z)."""
    spec = spec.strip()
    if spec == "steady":
        return steady_profile(duration_hint)
    if spec == "random":
        return random_profile(rng)
    kwargs = {}
    for item in filter(None, spec.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise argparse.ArgumentTypeError(f"profile item {item!r} is not key=value")
        key = key.strip()
        if key == "axis":
            parts = value.split(":")
            if len(parts) != 3:
                raise argparse.ArgumentTypeError("axis wants x:y:z")
            kwargs["swing_axis"] = tuple(float(p) for p in parts)
        elif key in _PROFILE_KEYS:
            kwargs[_PROFILE_KEYS[key]] = float(value)
        else:
            raise argparse.ArgumentTypeError(f"unknown profile key {key!r}")
    try:
        return HandshakeProfile(**kwargs)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


_JITTER_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(?:(?:±|\+-|\+/-)\s*(\d+(?:\.\d+)?))?\s*(?:ms)?\s*$")


def parse_jitter(text: str) -> tuple[float, float]:
    """'50±20ms' (also '50+-20ms', '50ms', '50') -> (mean_ms, deviation_ms)."""
    m = _JITTER_RE.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse jitter {text!r}")
    return float(m.group(1)), float(m.group(2) or 0.0)


def parse_speed(text: str) -> float:
    if text == "max":
        return 0.0  # sentinel: no pacing
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"speed must be a number or 'max', got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("speed must be positive (or 'max')")
    return value


def parse_hostport(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def _dist_of(out) -> StimulusDistribution:
    """Both live TickOutput and recorded StimulusRecord feed the bus."""
    dist = getattr(out, "dist", None)
    return dist if dist is not None else StimulusDistribution(out.intensity)


def _bus_sink(args, channels):
    """Returns (sink(tick or stimulus record), finalize()) for --bus none|sim|capture:PATH."""
    if args.bus == "none":
        return None, lambda: {}
    if args.bus == "sim":
        device = SimDevice(channels)

        def sink(out):
            for frame in schedule(_dist_of(out), channels):
                device.submit(frame, out.t_us)
        return sink, lambda: {"motor_positions": device.positions()}
    if args.bus.startswith("capture:"):
        capture = FrameCapture(args.bus.removeprefix("capture:"))
        count = [0]

        def sink(out):
            for frame in schedule(_dist_of(out), channels):
                capture.write(frame)
                count[0] += 1
        return sink, lambda: (capture.close(), {"frames_written": count[0]})[1]
    raise argparse.ArgumentTypeError(f"unknown bus {args.bus!r}")


# --- commands ---------------------------------------------------------------

def cmd_session(args) -> int:
    cfg = _load_cfg(args)
    calibration, params, site_groups, channels = _cfg_parts(cfg)
    rng = random.Random(args.seed)
    duration_hint = args.duration or 4.0
    profile = parse_profile_spec(args.profile, rng, duration_hint)

    if args.loopback:
        counterpart = parse_profile_spec(args.counterpart, rng, duration_hint)
        header = RecordingHeader(
            participant=args.participant, label=args.label,
            calibration=calibration or GripCalibration(),
            params=params or MappingParams(),
        )
        recording, report = loopback_recording(
            profile, counterpart, header, duration_s=args.duration,
            rate_hz=args.rate, media_event=True)
        recording.save(args.record)
        _emit(args, {"kind": "summary", "mode": "loopback", "record": args.record,
                     "ticks": report.ticks, "stale_fraction": round(report.stale_fraction, 6),
                     "sent": report.sent, "delivered": report.delivered})
        return 0

    if args.peer is None and args.listen is None:
        raise argparse.ArgumentTypeError("session needs --loopback, --peer, or --listen")
    recording = SessionRecording(RecordingHeader(
        participant=args.participant, label=args.label,
        calibration=calibration or GripCalibration(),
        params=params or MappingParams(),
        start_unix_us=time.time_ns() // 1000,
    ))
    engine = SessionEngine(params=params, calibration=calibration,
                           site_groups=site_groups or DEFAULT_SITE_GROUPS,
                           recorder=Recorder(recording))
    sink, finalize = _bus_sink(args, channels)
    engine.emit_event("media_start", 0)
    summary = run_udp_session(
        engine, profile, listen_port=args.listen or 0, peer=args.peer,
        duration_s=args.duration or 10.0, rate_hz=args.rate, sink=sink)
    recording.save(args.record)
    extra = finalize() or {}
    _emit(args, {"kind": "summary", "mode": "udp", "record": args.record,
                 "ticks": summary.ticks, "stale_fraction": round(summary.stale_fraction, 6),
                 "clasped_ticks": summary.clasped_ticks, "peer_seen": summary.peer_seen,
                 "decode_errors": summary.decode_errors, **extra})
    return 0


def cmd_replay(args) -> int:
    cfg = _load_cfg(args)
    _, _, _, channels = _cfg_parts(cfg)
    recording = load(args.file)
    sink, finalize = _bus_sink(args, channels)

    pacer = time.sleep if args.speed else None

    def on_event(record):
        _emit(args, {"kind": "event", "t_us": record.t_us, "name": record.name})

    report = replay(recording, sink=sink, speed=args.speed or 1.0,
                    on_event=on_event, pacer=pacer)
    extra = finalize() or {}
    _emit(args, {"kind": "replay-check", "ticks": len(report.recomputed),
                 "stored": len(report.stored), "matches": report.matches,
                 "mismatches": len(report.mismatches), **extra})
    if not report.matches:
        print("error: recomputed stimulus trace differs from stored trace",
              file=sys.stderr)
        return 2
    return 0


def cmd_synth(args) -> int:
    from .analysis import synth_dataset, write_dataset

    recordings = synth_dataset(seed=args.seed, participants=args.participants,
                               rate_hz=args.rate)
    paths = write_dataset(recordings, args.out)
    _emit(args, {"kind": "summary", "out": str(args.out), "recordings": len(paths),
                 "participants": args.participants, "labels": list(EMOTIONS)})
    return 0


def cmd_analyze(args) -> int:
    from .analysis import build_emotion_map, save_map

    paths = sorted(Path(args.dir).glob("*.hsrec"))
    if not paths:
        print(f"error: no .hsrec files in {args.dir}", file=sys.stderr)
        return 2
    recordings = [load(p) for p in paths]
    emap = build_emotion_map(recordings, k=args.k)
    if args.out:
        save_map(emap, args.out)
    for c in emap.clusters:
        _emit(args, {"kind": "cluster", "id": c.number, "label": c.label,
                     "subtendency": c.subtendency, "size": c.size,
                     "purity": round(c.purity, 6), "tied": c.majority_tied})
    _emit(args, {"kind": "summary", "recordings": len(recordings), "k": emap.k,
                 "overall_purity": round(emap.overall_purity, 6),
                 "min_purity": round(min(c.purity for c in emap.clusters), 6),
                 "out": str(args.out) if args.out else None})
    return 0


def cmd_classify(args) -> int:
    from .analysis import classify_recording, extract_features, load_map

    emap = load_map(args.map)
    recording = load(args.file)
    features = extract_features(recording)
    result = classify_recording(emap, recording)
    _emit(args, {"kind": "classification", "file": str(args.file),
                 "label": result.label, "subtendency": result.subtendency,
                 "cluster": result.cluster, "distance": round(result.distance, 6),
                 "features": [round(float(v), 6) for v in features.as_vector()]})
    return 0


def cmd_simulate_net(args) -> int:
    rng = random.Random(args.seed)
    profile = parse_profile_spec(args.profile, rng, args.duration)
    counterpart = parse_profile_spec(args.counterpart, rng, args.duration)
    mean_ms, dev_ms = args.jitter
    impairment = Impairment(loss=args.loss, delay_mean_ms=mean_ms,
                            delay_dev_ms=dev_ms, seed=args.seed)
    report = run_session(profile, counterpart, args.duration, rate_hz=args.rate,
                         impairment=impairment, b_silence_at_s=args.silence_at)
    record = {"kind": "summary", "ticks": report.ticks, "sent": report.sent,
              "lost": report.lost, "delivered": report.delivered,
              "decode_errors": report.decode_errors,
              "reordered_dropped": report.ingest_drops,
              "stale_fraction": round(report.stale_fraction_active, 6)}
    if args.silence_at is not None:
        record["silence_at_s"] = args.silence_at
        record["zeros_within_ms"] = (None if report.zeros_within_us is None
                                     else report.zeros_within_us / 1000)
    _emit(args, record)
    return 0


def cmd_serve(args) -> int:
    try:
        from .server import serve
    except ImportError as exc:
        print(f"error: the console server needs the 'console' extra "
              f"(pip install 'vrshake[console]'): {exc}", file=sys.stderr)
        return 1
    cfg = _load_cfg(args)
    host, port = args.http
    serve(host=host, port=port, map_path=args.map, config=cfg,
          static_dir=args.static)
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="vrshake", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"vrshake {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--format", choices=["text", "json-lines"], default="text",
                       help="output style (default text)")
        p.add_argument("--config", default=None,
                       help=f"config file path (or ${CONFIG_ENV_VAR})")

    p = sub.add_parser("session", help="run a live or loopback handshake session")
    common(p)
    p.add_argument("--record", required=True, help="recording file to write")
    p.add_argument("--loopback", action="store_true",
                   help="play both peers in-process on a virtual clock")
    p.add_argument("--listen", type=int, default=None, metavar="PORT")
    p.add_argument("--peer", type=parse_hostport, default=None, metavar="HOST:PORT")
    p.add_argument("--label", choices=EMOTIONS, default=None,
                   help="emotion label stored in the header")
    p.add_argument("--participant", default="anon")
    p.add_argument("--duration", type=float, default=None, metavar="SECONDS")
    p.add_argument("--rate", type=int, default=100, metavar="HZ")
    p.add_argument("--profile", default="steady", metavar="SPEC",
                   help="own motion: steady, random, or key=value,...")
    p.add_argument("--counterpart", default="steady", metavar="SPEC",
                   help="loopback peer motion (same grammar)")
    p.add_argument("--seed", type=int, default=0, help="seed for random profiles")
    p.add_argument("--bus", default="none", metavar="none|sim|capture:PATH")
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("replay", help="recompute and verify a recording")
    common(p)
    p.add_argument("file")
    p.add_argument("--speed", type=parse_speed, default=0.0, metavar="S|max",
                   help="wall-clock pacing factor (default max: no pacing)")
    p.add_argument("--bus", default="none", metavar="none|sim|capture:PATH",
                   help="drive the actuator path during replay")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("synth", help="generate the labeled synthetic corpus")
    common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--participants", type=int, default=10)
    p.add_argument("--rate", type=int, default=100, metavar="HZ")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="build the emotion map from a corpus directory")
    common(p)
    p.add_argument("dir")
    p.add_argument("--out", default=None, metavar="MAP", help=".hsmap file to write")
    p.add_argument("--k", type=int, default=8, help="number of clusters (default 8)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("classify", help="classify one recording against a map")
    common(p)
    p.add_argument("map")
    p.add_argument("file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate-net", help="run a session through the impairment harness")
    common(p)
    p.add_argument("--loss", type=float, default=0.0, help="drop probability 0..1")
    p.add_argument("--jitter", type=parse_jitter, default=(0.0, 0.0),
                   metavar="'M±Dms'", help="one-way delay mean and deviation")
    p.add_argument("--duration", type=float, default=60.0, metavar="SECONDS")
    p.add_argument("--rate", type=int, default=100, metavar="HZ")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--silence-at", type=float, default=None, metavar="SECONDS",
                   help="peer goes silent at this time")
    p.add_argument("--profile", default="steady", metavar="SPEC")
    p.add_argument("--counterpart", default="steady", metavar="SPEC")
    p.set_defaults(func=cmd_simulate_net)

    p = sub.add_parser("serve", help="serve the web console endpoint")
    common(p)
    p.add_argument("--http", type=parse_hostport, default=("127.0.0.1", 8787),
                   metavar="HOST:PORT")
    p.add_argument("--map", default=None, help=".hsmap for live classification")
    p.add_argument("--static", default=None, help="directory of console assets to serve")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
