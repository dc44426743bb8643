"""Session logging, replay format, and pose ingestion.

A session log is line-delimited JSON: one header object on the first line
(format name, schema version, and the target plan / engine settings needed
to replay the session standalone), then one record per processed tick.
Timestamps are engine-monotonic, so read(write(x)) == x and a replayed log
reproduces the original run exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .fsm import Phase, TransitionEvent, ZoneThresholds
from .geometry import AnatomicalFrame, ErrorVector, PlannedTrajectory, Pose
from .mapping import SynthMode, SynthParams
from .osc import OscMessage

FORMAT_NAME = "sononav-session"
SCHEMA_VERSION = 1

POSE_ADDRESS = "/sononav/pose"
PARAMS_ADDRESS = "/sononav/params"
EVENT_ADDRESS = "/sononav/event"


class BadQuaternionError(ValueError):
    """Inbound quaternion is too far from unit norm to trust."""


class UnknownTargetError(ValueError):
    """Inbound target id does not exist in the plan."""


class SchemaVersionError(ValueError):
    """Session file was written with an unsupported schema version."""


class SessionParseError(ValueError):
    """Session file line failed to parse."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class TargetPlan:
    """Ordered planned trajectories with labels, plus the shared frame
    and zone thresholds for the session."""

    targets: tuple[PlannedTrajectory, ...]
    labels: tuple[str, ...]
    frame: AnatomicalFrame
    thresholds: ZoneThresholds = ZoneThresholds()

    def __post_init__(self):
        if not self.targets:
            raise ValueError("plan needs at least one target")
        if len(self.labels) != len(self.targets):
            raise ValueError("one label per target required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("target labels must be unique")

    def to_dict(self) -> dict:
        def floats(vec):
            return [float(v) for v in vec]

        return {
            "targets": [{"label": label,
                         "entry_point": floats(t.entry_point),
                         "direction": floats(t.direction)}
                        for label, t in zip(self.labels, self.targets)],
            "frame": {"origin": floats(self.frame.origin),
                      "x_axis": floats(self.frame.x_axis),
                      "y_axis": floats(self.frame.y_axis),
                      "z_axis": floats(self.frame.z_axis)},
            "thresholds": {
                "working_radius_mm": self.thresholds.working_radius_mm,
                "working_angle_deg": self.thresholds.working_angle_deg,
                "target_mm": self.thresholds.target_mm,
                "target_deg": self.thresholds.target_deg,
                "transition_mm": self.thresholds.transition_mm,
                "transition_deg": self.thresholds.transition_deg,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TargetPlan":
        frame = AnatomicalFrame(
            np.asarray(data["frame"]["origin"], dtype=float),
            np.asarray(data["frame"]["x_axis"], dtype=float),
            np.asarray(data["frame"]["y_axis"], dtype=float),
            np.asarray(data["frame"]["z_axis"], dtype=float))
        targets = []
        labels = []
        for entry in data["targets"]:
            labels.append(entry["label"])
            targets.append(PlannedTrajectory(
                np.asarray(entry["entry_point"], dtype=float),
                np.asarray(entry["direction"], dtype=float)))
        thresholds = ZoneThresholds(**data["thresholds"])
        return cls(tuple(targets), tuple(labels), frame, thresholds)


@dataclass(frozen=True)
class SessionRecord:
    """One processed tick: pose in, full engine state out."""

    timestamp_s: float
    pose: Pose
    target_id: int
    error: ErrorVector
    phase: Phase
    synth: SynthParams
    events: tuple[TransitionEvent, ...] = ()

    def to_dict(self) -> dict:
        return {
            "t": self.timestamp_s,
            "pose": {"position": list(self.pose.position),
                     "orientation": list(self.pose.orientation)},
            "target_id": self.target_id,
            "error": {"e_x": self.error.e_x, "e_y": self.error.e_y,
                      "e_phi": self.error.e_phi, "e_delta": self.error.e_delta,
                      "d": self.error.d, "theta": self.error.theta},
            "phase": self.phase.value,
            "synth": synth_params_to_dict(self.synth),
            "events": [str(e) for e in self.events],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionRecord":
        err = data["error"]
        return cls(
            timestamp_s=data["t"],
            pose=Pose(np.asarray(data["pose"]["position"], dtype=float),
                      np.asarray(data["pose"]["orientation"], dtype=float)),
            target_id=data["target_id"],
            error=ErrorVector(err["e_x"], err["e_y"], err["e_phi"],
                              err["e_delta"], err["d"], err["theta"]),
            phase=Phase(data["phase"]),
            synth=synth_params_from_dict(data["synth"]),
            events=tuple(TransitionEvent.parse(e) for e in data["events"]),
        )


def synth_params_to_dict(params: SynthParams) -> dict:
    return {
        "mode": params.mode.value,
        "fundamental_hz": params.fundamental_hz,
        "pulse_interval_s": params.pulse_interval_s,
        "active_phase": params.active_phase.value,
        "chord_freqs_hz": (list(params.chord_freqs_hz)
                           if params.chord_freqs_hz is not None else None),
    }


def synth_params_from_dict(data: dict) -> SynthParams:
    chord = data.get("chord_freqs_hz")
    return SynthParams(
        mode=SynthMode(data["mode"]),
        fundamental_hz=data["fundamental_hz"],
        pulse_interval_s=data["pulse_interval_s"],
        active_phase=Phase(data["active_phase"]),
        chord_freqs_hz=tuple(chord) if chord is not None else None,
    )


@dataclass
class SessionLog:
    """A full session: the plan it ran against plus the per-tick records."""

    plan: TargetPlan
    records: list[SessionRecord] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def write_session(path, log: SessionLog) -> None:
    header = {"format": FORMAT_NAME, "version": SCHEMA_VERSION,
              "plan": log.plan.to_dict(), "meta": log.meta}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for record in log.records:
            fh.write(json.dumps(record.to_dict()) + "\n")


def read_session(path) -> SessionLog:
    """Parse a session log; errors carry the offending line number."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SessionParseError(1, "empty file, expected a header line")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise SessionParseError(1, f"bad header: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
        raise SessionParseError(1, f"not a {FORMAT_NAME} file")
    if header.get("version") != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"schema version {header.get('version')!r} unsupported "
            f"(reader is {SCHEMA_VERSION})")
    plan = TargetPlan.from_dict(header["plan"])
    records = []
    previous_t = -math.inf
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            record = SessionRecord.from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise SessionParseError(number, str(exc)) from exc
        if record.timestamp_s < previous_t:
            raise SessionParseError(number, "timestamps must be non-decreasing")
        previous_t = record.timestamp_s
        records.append(record)
    return SessionLog(plan=plan, records=records, meta=header.get("meta", {}))


# ---------------------------------------------------------------------------
# wire ingestion
# ---------------------------------------------------------------------------

def ingest_pose(message: OscMessage, plan: TargetPlan) -> tuple[Pose, int]:
    """Validate a /sononav/pose message into a Pose and target id.

    Expects 8 arguments: target id (int32), position x/y/z in mm and
    quaternion w/x/y/z as float32. A quaternion within 1e-3 of unit norm
    is renormalized; anything further off is rejected.
    """
    if message.address != POSE_ADDRESS:
        raise ValueError(f"expected {POSE_ADDRESS}, got {message.address}")
    args = message.arguments
    if len(args) != 8:
        raise ValueError(f"pose message needs 8 arguments, got {len(args)}")
    target_id = args[0]
    if not isinstance(target_id, int):
        raise ValueError("target id must be an int32")
    values = []
    for arg in args[1:]:
        if not isinstance(arg, float):
            raise ValueError("position and quaternion must be float32")
        values.append(arg)
    if not (0 <= target_id < len(plan.targets)):
        raise UnknownTargetError(
            f"target id {target_id} outside plan of {len(plan.targets)} targets")
    position = np.asarray(values[:3], dtype=float)
    quat = np.asarray(values[3:], dtype=float)
    norm = float(np.linalg.norm(quat))
    if abs(norm - 1.0) >= 1e-3:
        raise BadQuaternionError(f"quaternion norm {norm:.6f} too far from 1")
    return Pose(position, quat / norm), target_id


def pose_message(target_id: int, pose: Pose) -> OscMessage:
    """Encode a pose as the inbound wire message (float32 precision)."""
    args = [int(target_id)]
    args += [float(np.float32(v)) for v in pose.position]
    args += [float(np.float32(v)) for v in pose.orientation]
    return OscMessage(POSE_ADDRESS, tuple(args))
