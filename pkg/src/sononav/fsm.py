"""Four-phase alignment state machine with target/transition-zone hysteresis.

Phases: IP (outside the working area), EP (aligning the tip on the entry
plane), AP (aligning the orientation while the tip stays in place), FP
(fully aligned). Forward transitions require entering the inner transition
zone; backward transitions require leaving the outer target zone. The gap
between the two zones absorbs hand tremor and tracking jitter.

Boundary rule: "inside a transition zone" means <= the threshold, "exits a
target zone" means > the threshold, so behavior at exact boundary values
is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .geometry import ErrorVector


class Phase(Enum):
    IP = "IP"
    EP = "EP"
    AP = "AP"
    FP = "FP"


class Dimension(Enum):
    X = "x"
    Y = "y"
    PHI = "phi"
    DELTA = "delta"


class TransitionKind(Enum):
    ENTER_EP = "enter_ep"
    EP_TO_AP = "ep_to_ap"
    AP_TO_EP = "ap_to_ep"
    AP_TO_FP = "ap_to_fp"
    FP_TO_AP = "fp_to_ap"
    EXIT_TO_IP = "exit_to_ip"
    DIMENSION_REACHED = "dimension_reached"
    DIMENSION_LOST = "dimension_lost"


@dataclass(frozen=True)
class TransitionEvent:
    kind: TransitionKind
    dimension: Dimension | None = None

    def __str__(self) -> str:
        if self.dimension is not None:
            return f"{self.kind.value}:{self.dimension.value}"
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> "TransitionEvent":
        kind_text, _, dim_text = text.partition(":")
        return cls(TransitionKind(kind_text),
                   Dimension(dim_text) if dim_text else None)


@dataclass(frozen=True)
class ZoneThresholds:
    """Working-area extents plus nested target/transition zones.

    Defaults are the values used in the comparison study: 20 mm working
    radius, 30 degree working angle, 2 mm / 1.5 degree target zones,
    0.5 mm / 0.375 degree transition zones.
    """

    working_radius_mm: float = 20.0
    working_angle_deg: float = 30.0
    target_mm: float = 2.0
    target_deg: float = 1.5
    transition_mm: float = 0.5
    transition_deg: float = 0.375

    def __post_init__(self):
        if not (0.0 < self.transition_mm < self.target_mm < self.working_radius_mm):
            raise ValueError(
                "need 0 < transition_mm < target_mm < working_radius_mm")
        if not (0.0 < self.transition_deg < self.target_deg < self.working_angle_deg):
            raise ValueError(
                "need 0 < transition_deg < target_deg < working_angle_deg")


_NO_FLAGS = (False, False, False, False)


@dataclass(frozen=True)
class AlignmentState:
    """Phase plus the error snapshot and per-dimension at-target flags
    (x, y, phi, delta) from the last step."""

    phase: Phase = Phase.IP
    d: float = math.inf
    theta: float = math.inf
    at_target: tuple[bool, bool, bool, bool] = _NO_FLAGS

    @classmethod
    def initial(cls) -> "AlignmentState":
        return cls()


def dimension_flags(error: ErrorVector, thresholds: ZoneThresholds,
                    phase: Phase) -> tuple[bool, bool, bool, bool]:
    """Per-dimension at-target flags (x, y, phi, delta) for an interactive
    phase. In EP only x/y are monitored, in AP only phi/delta; boundary
    values count as reached (<=)."""
    if phase is Phase.EP:
        return (abs(error.e_x) <= thresholds.target_mm,
                abs(error.e_y) <= thresholds.target_mm,
                False, False)
    if phase is Phase.AP:
        return (False, False,
                abs(error.e_phi) <= thresholds.target_deg,
                abs(error.e_delta) <= thresholds.target_deg)
    raise ValueError(f"dimension flags are defined for EP/AP, not {phase.value}")


_DIMENSIONS = (Dimension.X, Dimension.Y, Dimension.PHI, Dimension.DELTA)


def step(state: AlignmentState, error: ErrorVector,
         thresholds: ZoneThresholds) -> tuple[AlignmentState, list[TransitionEvent]]:
    """Advance the state machine by one tick.

    Phase transitions cascade within the tick (a large error jump can fall
    straight from FP to IP, emitting each backward event in causal order);
    the zone gaps guarantee the cascade terminates. Dimension events are
    edge triggered: reached/lost fire only when a monitored flag changes
    between ticks of the same phase. A phase change stores the fresh flags
    as the new baseline without emitting dimension events, so a transition
    tick carries exactly its phase event.

    Raises ValueError when the error vector contains NaN.
    """
    if any(math.isnan(v) for v in (error.e_x, error.e_y, error.e_phi,
                                   error.e_delta, error.d, error.theta)):
        raise ValueError("error vector contains NaN")

    events: list[TransitionEvent] = []
    phase = state.phase

    while True:
        if phase is Phase.IP:
            if error.d < thresholds.working_radius_mm:
                phase = Phase.EP
                events.append(TransitionEvent(TransitionKind.ENTER_EP))
                continue
        elif phase is Phase.EP:
            if error.d > thresholds.working_radius_mm:
                phase = Phase.IP
                events.append(TransitionEvent(TransitionKind.EXIT_TO_IP))
                continue
            if error.d <= thresholds.transition_mm:
                phase = Phase.AP
                events.append(TransitionEvent(TransitionKind.EP_TO_AP))
                continue
        elif phase is Phase.AP:
            # the tip is still monitored: deviating beyond the target zone
            # demotes back to EP regardless of the angle
            if error.d > thresholds.target_mm:
                phase = Phase.EP
                events.append(TransitionEvent(TransitionKind.AP_TO_EP))
                continue
            if error.theta <= thresholds.transition_deg:
                phase = Phase.FP
                events.append(TransitionEvent(TransitionKind.AP_TO_FP))
                continue
        else:  # FP: leaving either target zone demotes
            if error.theta > thresholds.target_deg or error.d > thresholds.target_mm:
                phase = Phase.AP
                events.append(TransitionEvent(TransitionKind.FP_TO_AP))
                continue
        break

    if phase in (Phase.EP, Phase.AP):
        flags = dimension_flags(error, thresholds, phase)
    else:
        flags = _NO_FLAGS
    if phase is state.phase:
        for dim, was, now in zip(_DIMENSIONS, state.at_target, flags):
            if now and not was:
                events.append(TransitionEvent(TransitionKind.DIMENSION_REACHED, dim))
            elif was and not now:
                events.append(TransitionEvent(TransitionKind.DIMENSION_LOST, dim))

    return AlignmentState(phase, error.d, error.theta, flags), events
