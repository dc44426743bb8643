"""The per-tick navigation pipeline.

Every processed pose runs geometry -> state machine -> parameter mapping
and yields one SessionRecord. The engine owns one target at a time (the
harness or operator switches targets, which resets the alignment state)
and keeps a monotonic tick clock, so identical pose sequences always
produce identical records regardless of wall time.
"""

from __future__ import annotations

import math

import numpy as np

from .config import EngineConfig
from .fsm import AlignmentState, step
from .geometry import (
    ErrorVector,
    Pose,
    ProjectionDegenerateError,
    angular_error,
    entry_error,
    make_entry_plane,
)
from .mapping import map_params, normalize_errors
from .session import SessionLog, SessionRecord, TargetPlan


class NavigationEngine:
    """Stateful single-owner engine over an immutable plan and config."""

    def __init__(self, plan: TargetPlan, config: EngineConfig = EngineConfig()):
        self.plan = plan
        self.config = config
        self._planes = [make_entry_plane(t, plan.frame) for t in plan.targets]
        self._state = AlignmentState.initial()
        self._target_id = 0
        self._tick = 0

    @property
    def state(self) -> AlignmentState:
        return self._state

    @property
    def target_id(self) -> int:
        return self._target_id

    @property
    def timestamp_s(self) -> float:
        return self._tick / self.config.tick_rate_hz

    def select_target(self, target_id: int) -> None:
        """Switch the active target; resets the alignment state."""
        if not 0 <= target_id < len(self.plan.targets):
            raise ValueError(f"target id {target_id} outside plan")
        if target_id != self._target_id:
            self._target_id = target_id
            self._state = AlignmentState.initial()

    def reset_alignment(self) -> None:
        """Start a fresh trial on the current target."""
        self._state = AlignmentState.initial()

    def compute_error(self, pose: Pose) -> ErrorVector:
        """4-DOF error against the active target.

        Total over all poses: when an axis is perpendicular-degenerate to
        a projection plane the in-plane angles saturate at 90 degrees
        (they normalize to 1.0 anyway); theta is always exact.
        """
        target = self.plan.targets[self._target_id]
        plane = self._planes[self._target_id]
        e_x, e_y, d = entry_error(pose, plane)
        try:
            e_phi, e_delta, theta = angular_error(pose, target, self.plan.frame)
        except ProjectionDegenerateError:
            dot = float(np.dot(pose.axis, target.direction))
            theta = math.degrees(math.acos(min(1.0, max(-1.0, dot))))
            e_phi = e_delta = 90.0
        return ErrorVector(e_x, e_y, e_phi, e_delta, d, theta)

    def process(self, pose: Pose, target_id: int | None = None) -> SessionRecord:
        """Advance one tick: error, phase step, synth params, record."""
        if target_id is not None:
            self.select_target(target_id)
        error = self.compute_error(pose)
        self._state, events = step(self._state, error, self.plan.thresholds)
        params = map_params(self._state.phase,
                            normalize_errors(error, self.plan.thresholds),
                            self.config.mapping)
        record = SessionRecord(
            timestamp_s=self.timestamp_s,
            pose=pose,
            target_id=self._target_id,
            error=error,
            phase=self._state.phase,
            synth=params,
            events=tuple(events),
        )
        self._tick += 1
        return record


def replay_session(log: SessionLog,
                   config: EngineConfig | None = None) -> SessionLog:
    """Re-run a recorded session's poses through a fresh engine.

    Uses the engine config embedded in the log when none is given. The
    result carries freshly computed errors, phases, params, and events;
    on a faithful engine they equal the original record stream.
    """
    if config is None and "config" in log.meta:
        config = EngineConfig.from_dict(log.meta["config"])
    engine = NavigationEngine(log.plan, config or EngineConfig())
    records = [engine.process(rec.pose, rec.target_id) for rec in log.records]
    return SessionLog(plan=log.plan, records=records, meta=dict(log.meta))


def phase_event_trace(log: SessionLog) -> list[tuple[str, tuple[str, ...]]]:
    """The (phase, events) sequence of a log, for replay comparison."""
    return [(rec.phase.value, tuple(str(e) for e in rec.events))
            for rec in log.records]
