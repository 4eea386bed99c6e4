"""Capture and deterministic replay of handshake sessions (.hsrec files).

Line-oriented text format, one self-describing record per line:

    hsrec v=1 participant=<token> [label=<emotion>] start_unix_us=<u64> ...
    local t=<us> seq=<u32> ts=<u64> thumb=<cdeg> middle=<cdeg> grip=<milli> wx= wy= wz= ph=
    remote t=<us> ... (same fields; t is the local receive time)
    stim t=<us> phase=<Idle|Clasped|Released> own=<milli> opp=<milli> stale=<0|1> d=<f0,...,f6>
    event t=<us> name=<token>

Timestamps are session-relative microseconds and non-decreasing.  Values
never contain whitespace; grips travel as integer milli-units and
intensities as shortest-roundtrip floats, so serialize/parse is exact.

Replay re-runs the tick pipeline from the recorded local and remote
samples rather than playing back the stored stim lines; the stored lines
act as a checksum, which is the system's end-to-end determinism check.
The `media_start` event name is reserved as the demo video-sync cue.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

from .core import (
    ContactPhase,
    DEFAULT_SITE_GROUPS,
    GripCalibration,
    MappingParams,
    NUM_SITES,
    InvalidInputError,
)
from .session import FADE_US, HOLD_US, RemoteState, TickOutput, ingest, tick
from .wire import MalformedMessageError, SensorSample

FORMAT_VERSION = 1
EMOTIONS = ("Angry", "Happy", "Relaxed", "Sad")
MEDIA_START_EVENT = "media_start"


class RecordingError(ValueError):
    """Recording constraint violated (time regression, bad token, ...)."""


class RecordingFormatError(RecordingError):
    """A .hsrec line failed to parse; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


def _check_token(value: str, what: str) -> str:
    if not value or any(c.isspace() for c in value):
        raise RecordingError(f"{what} must be a non-empty whitespace-free token: {value!r}")
    return value


@dataclass(frozen=True)
class RecordingHeader:
    participant: str = "anon"
    label: str | None = None
    start_unix_us: int = 0
    calibration: GripCalibration = GripCalibration()
    params: MappingParams = MappingParams()
    site_groups: tuple[str, ...] = DEFAULT_SITE_GROUPS
    hold_us: int = HOLD_US
    fade_us: int = FADE_US

    def __post_init__(self) -> None:
        _check_token(self.participant, "participant")
        if self.label is not None and self.label not in EMOTIONS:
            raise RecordingError(f"label must be one of {EMOTIONS}, got {self.label!r}")


@dataclass(frozen=True)
class LocalRecord:
    t_us: int
    sample: SensorSample


@dataclass(frozen=True)
class RemoteRecord:
    t_us: int
    sample: SensorSample


@dataclass(frozen=True)
class StimulusRecord:
    t_us: int
    phase: ContactPhase
    own_milli: int
    opp_milli: int
    stale: bool
    intensity: tuple[float, ...]

    @classmethod
    def from_tick(cls, out: TickOutput) -> "StimulusRecord":
        return cls(
            t_us=out.t_us,
            phase=out.phase,
            own_milli=round(out.own_grip * 1000),
            opp_milli=round(out.opp_grip * 1000),
            stale=out.stale,
            intensity=out.dist.intensity,
        )


@dataclass(frozen=True)
class EventRecord:
    t_us: int
    name: str

    def __post_init__(self) -> None:
        _check_token(self.name, "event name")


Record = LocalRecord | RemoteRecord | StimulusRecord | EventRecord


class SessionRecording:
    """Ordered, single-writer record log; immutable once written out."""

    def __init__(self, header: RecordingHeader):
        self.header = header
        self.records: list[Record] = []

    def append(self, record: Record) -> None:
        if self.records and record.t_us < self.records[-1].t_us:
            raise RecordingError(
                f"time regression: {record.t_us} after {self.records[-1].t_us}")
        if record.t_us < 0:
            raise RecordingError(f"negative timestamp {record.t_us}")
        self.records.append(record)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, SessionRecording)
                and self.header == other.header and self.records == other.records)

    # -- views ---------------------------------------------------------

    def stimulus_trace(self) -> list[StimulusRecord]:
        return [r for r in self.records if isinstance(r, StimulusRecord)]

    def events(self) -> list[EventRecord]:
        return [r for r in self.records if isinstance(r, EventRecord)]

    # -- serialization ---------------------------------------------------

    def serialize(self) -> str:
        lines = [_header_line(self.header)]
        lines.extend(_record_line(r) for r in self.records)
        return "\n".join(lines) + "\n"

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.serialize())


class Recorder:
    """Engine-facing adapter: absolute clock in, session-relative records out."""

    def __init__(self, recording: SessionRecording, t0_us: int = 0):
        self.recording = recording
        self.t0_us = t0_us

    def _rel(self, t_us: int) -> int:
        return t_us - self.t0_us

    def add_local(self, sample: SensorSample, now_us: int) -> None:
        self.recording.append(LocalRecord(self._rel(now_us), sample))

    def add_remote(self, sample: SensorSample, now_us: int) -> None:
        self.recording.append(RemoteRecord(self._rel(now_us), sample))

    def add_tick(self, out: TickOutput) -> None:
        rec = StimulusRecord.from_tick(out)
        self.recording.append(
            StimulusRecord(t_us=self._rel(out.t_us), phase=rec.phase,
                           own_milli=rec.own_milli, opp_milli=rec.opp_milli,
                           stale=rec.stale, intensity=rec.intensity))

    def add_event(self, name: str, now_us: int) -> None:
        self.recording.append(EventRecord(self._rel(now_us), name))


class RecordingWriter:
    """Incremental writer: header on open, one line per appended record."""

    def __init__(self, path: str, header: RecordingHeader):
        self.header = header
        self._last_t = -1
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(_header_line(header) + "\n")

    def append(self, record: Record) -> None:
        if record.t_us < max(self._last_t, 0):
            raise RecordingError(f"time regression: {record.t_us} after {self._last_t}")
        self._last_t = record.t_us
        self._fh.write(_record_line(record) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordingWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# -- line grammar ---------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)  # shortest round-trip form
    return str(value)


def _header_line(h: RecordingHeader) -> str:
    c, p = h.calibration, h.params
    parts = [f"hsrec v={FORMAT_VERSION}", f"participant={h.participant}"]
    if h.label is not None:
        parts.append(f"label={h.label}")
    parts += [
        f"start_unix_us={h.start_unix_us}",
        f"thumb_open={_fmt(c.thumb_open_deg)}", f"thumb_closed={_fmt(c.thumb_closed_deg)}",
        f"middle_open={_fmt(c.middle_open_deg)}", f"middle_closed={_fmt(c.middle_closed_deg)}",
        f"thumb_weight={_fmt(c.thumb_weight)}",
        f"finger_gain={_fmt(p.finger_gain)}", f"palm_gain={_fmt(p.palm_gain)}",
        f"contact_on={_fmt(p.contact_on)}", f"contact_off={_fmt(p.contact_off)}",
        f"hold_us={h.hold_us}", f"fade_us={h.fade_us}",
        "groups=" + ",".join(h.site_groups),
    ]
    return " ".join(parts)


def _sample_fields(s: SensorSample) -> str:
    return (f"seq={s.seq} ts={s.t_send_us} thumb={s.thumb_cdeg} middle={s.middle_cdeg} "
            f"grip={s.grip_milli} wx={s.wrist_mm[0]} wy={s.wrist_mm[1]} wz={s.wrist_mm[2]} "
            f"ph={s.phase}")


def _record_line(r: Record) -> str:
    if isinstance(r, LocalRecord):
        return f"local t={r.t_us} {_sample_fields(r.sample)}"
    if isinstance(r, RemoteRecord):
        return f"remote t={r.t_us} {_sample_fields(r.sample)}"
    if isinstance(r, StimulusRecord):
        d = ",".join(_fmt(v) for v in r.intensity)
        return (f"stim t={r.t_us} phase={r.phase.value} own={r.own_milli} "
                f"opp={r.opp_milli} stale={_fmt(r.stale)} d={d}")
    if isinstance(r, EventRecord):
        return f"event t={r.t_us} name={r.name}"
    raise TypeError(f"not a record: {type(r).__name__}")


def _parse_kv(fields: Iterable[str], line: int) -> dict[str, str]:
    out = {}
    for field_ in fields:
        if "=" not in field_:
            raise RecordingFormatError(f"expected key=value, got {field_!r}", line)
        key, value = field_.split("=", 1)
        out[key] = value
    return out


def _get(kv: dict[str, str], key: str, line: int) -> str:
    if key not in kv:
        raise RecordingFormatError(f"missing field {key!r}", line)
    return kv[key]


def _get_int(kv: dict[str, str], key: str, line: int) -> int:
    raw = _get(kv, key, line)
    try:
        return int(raw)
    except ValueError:
        raise RecordingFormatError(f"field {key!r}: not an integer: {raw!r}", line) from None


def _get_float(kv: dict[str, str], key: str, line: int) -> float:
    raw = _get(kv, key, line)
    try:
        return float(raw)
    except ValueError:
        raise RecordingFormatError(f"field {key!r}: not a number: {raw!r}", line) from None


def _parse_sample(kv: dict[str, str], line: int) -> SensorSample:
    try:
        return SensorSample(
            seq=_get_int(kv, "seq", line),
            t_send_us=_get_int(kv, "ts", line),
            thumb_cdeg=_get_int(kv, "thumb", line),
            middle_cdeg=_get_int(kv, "middle", line),
            grip_milli=_get_int(kv, "grip", line),
            wrist_mm=(_get_int(kv, "wx", line), _get_int(kv, "wy", line),
                      _get_int(kv, "wz", line)),
            phase=_get_int(kv, "ph", line),
        )
    except MalformedMessageError as exc:
        raise RecordingFormatError(f"bad sample: {exc}", line) from exc


_PHASES_BY_NAME = {p.value: p for p in ContactPhase}


def parse(text: str) -> SessionRecording:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("hsrec "):
        raise RecordingFormatError("missing hsrec header", 1)
    kv = _parse_kv(lines[0].split()[1:], 1)
    if _get_int(kv, "v", 1) != FORMAT_VERSION:
        raise RecordingFormatError(f"unsupported version {kv['v']}", 1)
    groups = tuple(_get(kv, "groups", 1).split(","))
    if len(groups) != NUM_SITES or any(g not in ("finger", "palm") for g in groups):
        raise RecordingFormatError(f"bad groups field {kv['groups']!r}", 1)
    try:
        header = RecordingHeader(
            participant=_get(kv, "participant", 1),
            label=kv.get("label"),
            start_unix_us=_get_int(kv, "start_unix_us", 1),
            calibration=GripCalibration(
                thumb_open_deg=_get_float(kv, "thumb_open", 1),
                thumb_closed_deg=_get_float(kv, "thumb_closed", 1),
                middle_open_deg=_get_float(kv, "middle_open", 1),
                middle_closed_deg=_get_float(kv, "middle_closed", 1),
                thumb_weight=_get_float(kv, "thumb_weight", 1),
            ),
            params=MappingParams(
                finger_gain=_get_float(kv, "finger_gain", 1),
                palm_gain=_get_float(kv, "palm_gain", 1),
                contact_on=_get_float(kv, "contact_on", 1),
                contact_off=_get_float(kv, "contact_off", 1),
            ),
            site_groups=groups,
            hold_us=_get_int(kv, "hold_us", 1),
            fade_us=_get_int(kv, "fade_us", 1),
        )
    except RecordingError:
        raise
    except ValueError as exc:
        raise RecordingFormatError(str(exc), 1) from exc

    rec = SessionRecording(header)
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        fields = raw.split()
        kind, kv = fields[0], _parse_kv(fields[1:], lineno)
        t_us = _get_int(kv, "t", lineno)
        if kind == "local":
            record: Record = LocalRecord(t_us, _parse_sample(kv, lineno))
        elif kind == "remote":
            record = RemoteRecord(t_us, _parse_sample(kv, lineno))
        elif kind == "stim":
            phase_name = _get(kv, "phase", lineno)
            if phase_name not in _PHASES_BY_NAME:
                raise RecordingFormatError(f"unknown phase {phase_name!r}", lineno)
            d = _get(kv, "d", lineno).split(",")
            if len(d) != NUM_SITES:
                raise RecordingFormatError(f"expected {NUM_SITES} intensities", lineno)
            try:
                intensity = tuple(float(v) for v in d)
            except ValueError:
                raise RecordingFormatError(f"bad intensity list {kv['d']!r}", lineno) from None
            record = StimulusRecord(
                t_us=t_us, phase=_PHASES_BY_NAME[phase_name],
                own_milli=_get_int(kv, "own", lineno), opp_milli=_get_int(kv, "opp", lineno),
                stale=_get_int(kv, "stale", lineno) != 0, intensity=intensity)
        elif kind == "event":
            record = EventRecord(t_us, _get(kv, "name", lineno))
        else:
            raise RecordingFormatError(f"unknown record kind {kind!r}", lineno)
        try:
            rec.append(record)
        except RecordingError as exc:
            raise RecordingFormatError(str(exc), lineno) from exc
    return rec


def load(path: str) -> SessionRecording:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


# -- replay -----------------------------------------------------------------

@dataclass
class ReplayReport:
    """Outcome of one replay pass."""

    recomputed: list[StimulusRecord] = field(default_factory=list)
    stored: list[StimulusRecord] = field(default_factory=list)
    events: list[EventRecord] = field(default_factory=list)
    mismatches: list[int] = field(default_factory=list)  # t_us of disagreeing ticks

    @property
    def matches(self) -> bool:
        """True when every stored stim record was confirmed (or none were checked)."""
        return not self.mismatches


def replay(
    rec: SessionRecording,
    sink: Callable[[StimulusRecord], None] | None = None,
    speed: float = 1.0,
    on_event: Callable[[EventRecord], None] | None = None,
    pacer: Callable[[float], None] | None = None,
    params: MappingParams | None = None,
) -> ReplayReport:
    """Re-run the tick pipeline over a recording.

    Distributions are recomputed from the recorded local and remote
    samples (so alternative mapping params can be auditioned via
    `params`) and handed to `sink` at t_us/speed spacing when a pacer
    is given.  With the header's own params, the recomputed trace must
    equal the stored stim records; disagreements land in the report.
    """
    if not speed > 0:
        raise InvalidInputError(f"speed must be positive, got {speed!r}")
    h = rec.header
    effective = params if params is not None else h.params
    check_stored = params is None

    report = ReplayReport()
    remote = RemoteState()
    phase = ContactPhase.IDLE
    last_t: int | None = None
    prev_emit_t: int | None = None

    for index, record in enumerate(rec.records):
        if last_t is not None and record.t_us < last_t:
            raise RecordingError(f"record {index}: time regression at t={record.t_us}")
        last_t = record.t_us

        if isinstance(record, RemoteRecord):
            remote = ingest(remote, record.sample, record.t_us)
        elif isinstance(record, LocalRecord):
            out = tick(record.sample, remote, phase, effective, record.t_us,
                       h.site_groups, h.hold_us, h.fade_us)
            phase = out.phase
            stim = StimulusRecord.from_tick(out)
            report.recomputed.append(stim)
            if pacer is not None:
                gap_us = 0 if prev_emit_t is None else stim.t_us - prev_emit_t
                if gap_us > 0:
                    pacer(gap_us / speed / 1e6)
            prev_emit_t = stim.t_us
            if sink is not None:
                sink(stim)
        elif isinstance(record, StimulusRecord):
            report.stored.append(record)
        elif isinstance(record, EventRecord):
            report.events.append(record)
            if on_event is not None:
                on_event(record)

    if check_stored and report.stored:
        for got, want in zip(report.recomputed, report.stored):
            if got != want:
                report.mismatches.append(want.t_us)
        if len(report.recomputed) != len(report.stored):
            report.mismatches.append(-1)
    return report
