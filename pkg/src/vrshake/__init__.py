"""Two-peer VR handshake: grip and wrist motion in, skin stimulus out.

Subsystems:
  core       joints, grip, contact phases, the 7-site stimulus mapping
  wire       peer-to-peer datagram codec and clock exchange
  session    deterministic tick engine (explicit microsecond timestamps)
  bus        servo frame codec, goal scheduling, simulated motors
  recording  text session logs with exact replay
  profiles   parametric handshake motions for simulation
  netsim     in-process two-peer sessions over an impaired virtual link
  analysis   five elements, projection, clustered style map
"""

from .core import (
    ConfigError,
    ContactPhase,
    GripCalibration,
    HandshakeConfig,
    InvalidInputError,
    JointAngles,
    MappingParams,
    NUM_SITES,
    SiteId,
    StimulusDistribution,
    angles_from_grip,
    grip_from_angles,
    load_config,
    stimulus_distribution,
    update_phase,
)
from .session import SensorReading, SessionEngine, TickOutput, clock_offset
from .recording import SessionRecording, RecordingHeader, load, parse, replay

__version__ = "1.0.0"

__all__ = [
    "ConfigError",
    "ContactPhase",
    "GripCalibration",
    "HandshakeConfig",
    "InvalidInputError",
    "JointAngles",
    "MappingParams",
    "NUM_SITES",
    "RecordingHeader",
    "SensorReading",
    "SessionEngine",
    "SessionRecording",
    "SiteId",
    "StimulusDistribution",
    "TickOutput",
    "angles_from_grip",
    "clock_offset",
    "grip_from_angles",
    "load",
    "load_config",
    "parse",
    "replay",
    "stimulus_distribution",
    "update_phase",
    "__version__",
]
