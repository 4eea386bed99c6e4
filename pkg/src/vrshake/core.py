"""Domain model for the two-party handshake renderer.

Sensing side: two joint angles (thumb first joint, middle-finger second
joint) are blended into a single grip value in [0, 1].  Rendering side:
the pair (own grip, opponent grip) drives a 7-site skin-deformation
intensity distribution.  Palm sites follow the opponent's grip, finger
sites follow one's own grip; stimuli are gated to the Clasped phase of
a hysteresis contact machine so a handshake has a crisp start and end.

Everything here is pure and stateless: the contact phase is passed in
and out explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class ConfigError(ValueError):
    """A configuration file or value could not be used."""


class SiteId(IntEnum):
    """The seven stimulus presentation sites, in fixed channel order."""

    INDEX_MID = 0    # middle tubercle of index finger
    MIDDLE_MID = 1   # middle tubercle of middle finger
    RING_MID = 2     # middle tubercle of ring finger
    LITTLE_MID = 3   # middle tubercle of little finger
    THUMB_BASE = 4   # base of thumb
    PALM_LATERAL = 5 # lateral surface of palm
    PALM_CENTER = 6  # center of palm

NUM_SITES = 7

# Finger-group sites render own grip, palm-group sites render the
# opponent's grip.  The thumb base is grouped with the fingers
# (anatomical adjacency); overridable via config keys group_<site>.
FINGER_SITES = frozenset({
    SiteId.INDEX_MID, SiteId.MIDDLE_MID, SiteId.RING_MID,
    SiteId.LITTLE_MID, SiteId.THUMB_BASE,
})
PALM_SITES = frozenset({SiteId.PALM_LATERAL, SiteId.PALM_CENTER})

DEFAULT_SITE_GROUPS: tuple[str, ...] = tuple(
    "finger" if SiteId(i) in FINGER_SITES else "palm" for i in range(NUM_SITES)
)


class ContactPhase(Enum):
    """Contact state of the handshake; transitions only Idle -> Clasped -> Released -> Idle."""

    IDLE = "Idle"
    CLASPED = "Clasped"
    RELEASED = "Released"


@dataclass(frozen=True)
class JointAngles:
    """One reading of the two measured finger joints, in degrees."""

    thumb_ip_deg: float   # thumb first (interphalangeal) joint
    middle_pip_deg: float # middle finger second (proximal interphalangeal) joint


@dataclass(frozen=True)
class GripCalibration:
    """Per-joint open/closed angles and the thumb/middle blend weight."""

    thumb_open_deg: float = 10.0
    thumb_closed_deg: float = 70.0
    middle_open_deg: float = 5.0
    middle_closed_deg: float = 95.0
    thumb_weight: float = 0.5  # share of the thumb joint in the blend, in [0, 1]

    def validate(self) -> None:
        for name in ("thumb_open_deg", "thumb_closed_deg",
                     "middle_open_deg", "middle_closed_deg", "thumb_weight"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidInputError(f"calibration {name} is not finite")
        if self.thumb_closed_deg == self.thumb_open_deg:
            raise InvalidInputError("thumb closed angle equals open angle")
        if self.middle_closed_deg == self.middle_open_deg:
            raise InvalidInputError("middle closed angle equals open angle")
        if not 0.0 <= self.thumb_weight <= 1.0:
            raise InvalidInputError("thumb_weight outside [0, 1]")


@dataclass(frozen=True)
class MappingParams:
    """Gains and contact thresholds of the grip-to-stimulus map."""

    finger_gain: float = 1.0  # scales own grip onto finger-group sites
    palm_gain: float = 1.0    # scales opponent grip onto palm-group sites
    contact_on: float = 0.2   # min(own, opp) at or above this enters Clasped
    contact_off: float = 0.1  # min(own, opp) below this leaves Clasped

    def validate(self) -> None:
        for name in ("finger_gain", "palm_gain"):
            g = getattr(self, name)
            if not (math.isfinite(g) and 0.0 <= g <= 1.0):
                raise InvalidInputError(f"{name} outside [0, 1]")
        for name in ("contact_on", "contact_off"):
            t = getattr(self, name)
            if not (math.isfinite(t) and 0.0 <= t <= 1.0):
                raise InvalidInputError(f"{name} outside [0, 1]")
        if not self.contact_off < self.contact_on:
            raise InvalidInputError("contact_off must be below contact_on (hysteresis)")


@dataclass(frozen=True)
class StimulusDistribution:
    """Per-site stimulus intensities in [0, 1], indexed by SiteId."""

    intensity: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.intensity) != NUM_SITES:
            raise InvalidInputError(f"expected {NUM_SITES} intensities, got {len(self.intensity)}")
        for v in self.intensity:
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise InvalidInputError(f"intensity {v!r} outside [0, 1]")

    def __getitem__(self, site: SiteId) -> float:
        return self.intensity[site]


ZERO_DISTRIBUTION = StimulusDistribution((0.0,) * NUM_SITES)


def _flexion(angle_deg: float, open_deg: float, closed_deg: float) -> float:
    f = (angle_deg - open_deg) / (closed_deg - open_deg)
    return min(1.0, max(0.0, f))


def grip_from_angles(angles: JointAngles, calib: GripCalibration) -> float:
    """Blend the two joint flexions into one grip value in [0, 1].

    Each joint is normalized linearly between its calibrated open and
    closed angles (clamped), then blended by thumb_weight.
    """
    if not (math.isfinite(angles.thumb_ip_deg) and math.isfinite(angles.middle_pip_deg)):
        raise InvalidInputError("joint angle is not finite")
    calib.validate()
    f_thumb = _flexion(angles.thumb_ip_deg, calib.thumb_open_deg, calib.thumb_closed_deg)
    f_middle = _flexion(angles.middle_pip_deg, calib.middle_open_deg, calib.middle_closed_deg)
    return calib.thumb_weight * f_thumb + (1.0 - calib.thumb_weight) * f_middle


def angles_from_grip(grip: float, calib: GripCalibration) -> JointAngles:
    """Inverse of grip_from_angles for synthesized input sources.

    Puts both joints at the same flexion, which grip_from_angles maps
    back to the given grip for any blend weight.
    """
    if not (math.isfinite(grip) and 0.0 <= grip <= 1.0):
        raise InvalidInputError("grip outside [0, 1]")
    return JointAngles(
        thumb_ip_deg=calib.thumb_open_deg + grip * (calib.thumb_closed_deg - calib.thumb_open_deg),
        middle_pip_deg=calib.middle_open_deg + grip * (calib.middle_closed_deg - calib.middle_open_deg),
    )


def update_phase(own: float, opp: float, prev: ContactPhase, params: MappingParams) -> ContactPhase:
    """Advance the contact machine by one tick.

    Idle -> Clasped once both grips reach contact_on; Clasped -> Released
    once either drops below contact_off; Released -> Idle once both are
    below contact_off for a full tick.  A new clasp requires passing
    through Idle again.
    """
    lo = min(own, opp)
    if prev is ContactPhase.IDLE:
        return ContactPhase.CLASPED if lo >= params.contact_on else ContactPhase.IDLE
    if prev is ContactPhase.CLASPED:
        return ContactPhase.RELEASED if lo < params.contact_off else ContactPhase.CLASPED
    # Released: wait for both hands fully open before rearming.
    if max(own, opp) < params.contact_off:
        return ContactPhase.IDLE
    return ContactPhase.RELEASED


def stimulus_distribution(
    own: float,
    opp: float,
    phase: ContactPhase,
    params: MappingParams,
    site_groups: tuple[str, ...] = DEFAULT_SITE_GROUPS,
) -> StimulusDistribution:
    """Map the grip pair to the 7-site intensity vector.

    Outside the Clasped phase everything is zero.  While clasped, finger
    sites render finger_gain * own and palm sites render palm_gain * opp:
    your own squeeze loads the fingers, the opponent's squeeze loads the palm.
    """
    if phase is not ContactPhase.CLASPED:
        return ZERO_DISTRIBUTION
    finger = params.finger_gain * own
    palm = params.palm_gain * opp
    return StimulusDistribution(tuple(
        finger if site_groups[i] == "finger" else palm for i in range(NUM_SITES)
    ))


# --- plain-text configuration -------------------------------------------
#
# Config files are key=value lines; '#' starts a comment.  Recognized keys
# (all optional, defaults compiled in):
#
#   thumb_open_deg, thumb_closed_deg, middle_open_deg, middle_closed_deg,
#   thumb_weight                      -> GripCalibration
#   finger_gain, palm_gain, contact_on, contact_off -> MappingParams
#   group_<site>=finger|palm          -> site group override, where <site> is
#       the lower-cased SiteId name (e.g. group_thumb_base=palm)
#
# Actuator channel keys (chan_<site>) are parsed by vrshake.bus.

_CALIB_KEYS = ("thumb_open_deg", "thumb_closed_deg", "middle_open_deg",
               "middle_closed_deg", "thumb_weight")
_PARAM_KEYS = ("finger_gain", "palm_gain", "contact_on", "contact_off")


def parse_config_text(text: str) -> dict[str, str]:
    """Parse key=value lines into a dict; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _take_floats(raw: dict[str, str], keys: tuple[str, ...]) -> dict[str, float]:
    picked = {}
    for key in keys:
        if key in raw:
            try:
                picked[key] = float(raw[key])
            except ValueError as exc:
                raise ConfigError(f"{key}: not a number: {raw[key]!r}") from exc
    return picked


@dataclass(frozen=True)
class HandshakeConfig:
    """Calibration, mapping parameters and site grouping from one config file."""

    calibration: GripCalibration
    params: MappingParams
    site_groups: tuple[str, ...]
    raw: dict[str, str]  # all parsed keys, for modules with extra sections


def config_from_text(text: str) -> HandshakeConfig:
    raw = parse_config_text(text)
    calib = GripCalibration(**_take_floats(raw, _CALIB_KEYS))
    params = MappingParams(**_take_floats(raw, _PARAM_KEYS))
    groups = list(DEFAULT_SITE_GROUPS)
    known = {f"group_{site.name.lower()}": site for site in SiteId}
    for key, value in raw.items():
        if not key.startswith("group_"):
            continue
        site = known.get(key)
        if site is None:
            raise ConfigError(f"{key}: unknown site")
        if value not in ("finger", "palm"):
            raise ConfigError(f"{key}: expected finger or palm, got {value!r}")
        groups[site] = value
    try:
        calib.validate()
        params.validate()
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from exc
    return HandshakeConfig(calibration=calib, params=params,
                           site_groups=tuple(groups), raw=raw)


def load_config(path: str) -> HandshakeConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_text(fh.read())
