"""Mapping from (phase, normalized errors) to synthesis control parameters.

The interactive phases drive a pulse-tone stream: one error dimension maps
exponentially to the fundamental frequency (pitch is perceived
exponentially), the other linearly to the pulse interval. In EP that is
(e_x -> pitch, e_y -> rate) over 880-1760 Hz; in AP (e_phi -> pitch,
e_delta -> rate) over 110-440 Hz, a deliberately disjoint register so the
two phases cannot be confused. The static phases play fixed chords: a
minor-ish cluster in IP, a bright major chord in FP.

Zero error maps to the first endpoint of each configured range; swapping
the endpoints in MappingConfig flips the orientation of a mapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .fsm import Dimension, Phase, TransitionEvent, TransitionKind, ZoneThresholds
from .geometry import ErrorVector

# equal-tempered major scale steps (semitones above the root)
_MAJOR_SCALE_STEPS = (0, 2, 4, 5, 7, 9, 11, 12)


def _scale_from(root_hz: float) -> tuple[float, ...]:
    return tuple(root_hz * 2.0 ** (s / 12.0) for s in _MAJOR_SCALE_STEPS)


@dataclass(frozen=True)
class MappingConfig:
    """Synthesis mapping parameters; defaults are the shipped values."""

    ep_freq_range_hz: tuple[float, float] = (880.0, 1760.0)
    ap_freq_range_hz: tuple[float, float] = (110.0, 440.0)
    pulse_interval_range_s: tuple[float, float] = (0.35, 0.1)
    ip_chord_hz: tuple[float, ...] = (123.47, 155.56, 185.0, 246.94)
    ip_interval_s: float = 0.66
    fp_chord_hz: tuple[float, ...] = (440.0, 523.25, 659.26, 880.0)
    fp_interval_s: float = 1.5
    # earcon pitch content (the published design fixes counts and contour,
    # not pitches); x/phi share one pair, y/delta a slightly different one
    optimum_x_phi_hz: tuple[float, float] = (1320.0, 1760.0)
    optimum_y_delta_hz: tuple[float, float] = (1320.0, 1567.98)
    optimum_note_s: float = 0.08
    transition_scale_root_hz: float = 440.0
    transition_note_s: float = 0.06

    def __post_init__(self):
        for name in ("ep_freq_range_hz", "ap_freq_range_hz"):
            lo, hi = getattr(self, name)
            if lo <= 0 or hi <= 0 or not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"{name} endpoints must be positive and finite")
        if min(self.pulse_interval_range_s) <= 0:
            raise ValueError("pulse interval endpoints must be positive")
        if self.ip_interval_s <= 0 or self.fp_interval_s <= 0:
            raise ValueError("chord intervals must be positive")
        for chord in (self.ip_chord_hz, self.fp_chord_hz):
            if not chord or min(chord) <= 0:
                raise ValueError("chord frequencies must be positive")


class SynthMode(Enum):
    PULSE_STREAM = "pulse_stream"
    CHORD = "chord"


@dataclass(frozen=True)
class SynthParams:
    """Complete audio control state for one tick."""

    mode: SynthMode
    fundamental_hz: float
    pulse_interval_s: float
    active_phase: Phase
    chord_freqs_hz: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (math.isfinite(self.fundamental_hz) and self.fundamental_hz > 0):
            raise ValueError("fundamental must be positive and finite")
        if not (math.isfinite(self.pulse_interval_s) and self.pulse_interval_s > 0):
            raise ValueError("pulse interval must be positive and finite")
        if self.mode is SynthMode.CHORD and not self.chord_freqs_hz:
            raise ValueError("chord mode requires chord frequencies")


class EarconKind(Enum):
    OPTIMUM_X_PHI = "optimum_x_phi"
    OPTIMUM_Y_DELTA = "optimum_y_delta"
    TRANSITION_UP = "transition_up"
    TRANSITION_DOWN = "transition_down"


@dataclass(frozen=True)
class EarconSpec:
    """A short symbolic sound: a fixed note sequence at one duration.

    Optimum earcons carry exactly two notes, transition earcons eight in
    strictly ascending (up) or descending (down) order; `validate` checks
    this, the factories in `earcons_for` always produce valid specs.
    """

    kind: EarconKind
    note_freqs_hz: tuple[float, ...]
    note_duration_s: float

    def validate(self) -> None:
        n = len(self.note_freqs_hz)
        if self.kind in (EarconKind.OPTIMUM_X_PHI, EarconKind.OPTIMUM_Y_DELTA):
            if n != 2:
                raise ValueError(f"{self.kind.value} must have exactly 2 notes")
        else:
            if n != 8:
                raise ValueError(f"{self.kind.value} must have exactly 8 notes")
            pairs = zip(self.note_freqs_hz, self.note_freqs_hz[1:])
            if self.kind is EarconKind.TRANSITION_UP:
                if not all(a < b for a, b in pairs):
                    raise ValueError("transition_up notes must strictly ascend")
            elif not all(a > b for a, b in pairs):
                raise ValueError("transition_down notes must strictly descend")
        if self.note_duration_s <= 0:
            raise ValueError("note duration must be positive")


def normalize_errors(error: ErrorVector,
                     thresholds: ZoneThresholds) -> tuple[float, float, float, float]:
    """Map |errors| into [0, 1] by the working-area extents, clamped."""

    def clamp01(v: float) -> float:
        return min(1.0, max(0.0, v))

    return (clamp01(abs(error.e_x) / thresholds.working_radius_mm),
            clamp01(abs(error.e_y) / thresholds.working_radius_mm),
            clamp01(abs(error.e_phi) / thresholds.working_angle_deg),
            clamp01(abs(error.e_delta) / thresholds.working_angle_deg))


def _exp_interp(lo: float, hi: float, x: float) -> float:
    return lo * (hi / lo) ** x


def _lin_interp(lo: float, hi: float, x: float) -> float:
    return lo + x * (hi - lo)


def map_params(phase: Phase, e_n: tuple[float, float, float, float],
               config: MappingConfig = MappingConfig()) -> SynthParams:
    """Synthesis parameters for one tick.

    e_n is the normalized (x, y, phi, delta) error vector; components
    outside the active phase are ignored. Pure and deterministic.
    """
    if any(not (0.0 <= v <= 1.0) for v in e_n):
        raise ValueError("normalized errors must lie in [0, 1]")
    if phase is Phase.EP:
        return SynthParams(
            mode=SynthMode.PULSE_STREAM,
            fundamental_hz=_exp_interp(*config.ep_freq_range_hz, e_n[0]),
            pulse_interval_s=_lin_interp(*config.pulse_interval_range_s, e_n[1]),
            active_phase=phase)
    if phase is Phase.AP:
        return SynthParams(
            mode=SynthMode.PULSE_STREAM,
            fundamental_hz=_exp_interp(*config.ap_freq_range_hz, e_n[2]),
            pulse_interval_s=_lin_interp(*config.pulse_interval_range_s, e_n[3]),
            active_phase=phase)
    if phase is Phase.IP:
        chord, interval = config.ip_chord_hz, config.ip_interval_s
    else:
        chord, interval = config.fp_chord_hz, config.fp_interval_s
    return SynthParams(mode=SynthMode.CHORD, fundamental_hz=chord[0],
                       pulse_interval_s=interval, active_phase=phase,
                       chord_freqs_hz=chord)


_OPTIMUM_FOR = {
    Dimension.X: EarconKind.OPTIMUM_X_PHI,
    Dimension.PHI: EarconKind.OPTIMUM_X_PHI,
    Dimension.Y: EarconKind.OPTIMUM_Y_DELTA,
    Dimension.DELTA: EarconKind.OPTIMUM_Y_DELTA,
}


def earcons_for(events: list[TransitionEvent],
                config: MappingConfig = MappingConfig()) -> list[EarconSpec]:
    """Earcons triggered by a tick's transition events, in causal order.

    Dimension-reached events play the optimum earcons (x and phi share
    one, y and delta the other); EP->AP plays the ascending transition
    earcon, AP->EP the descending one. Everything else is silent.
    """
    specs: list[EarconSpec] = []
    for event in events:
        if event.kind is TransitionKind.DIMENSION_REACHED:
            kind = _OPTIMUM_FOR[event.dimension]
            notes = (config.optimum_x_phi_hz if kind is EarconKind.OPTIMUM_X_PHI
                     else config.optimum_y_delta_hz)
            spec = EarconSpec(kind, tuple(notes), config.optimum_note_s)
        elif event.kind is TransitionKind.EP_TO_AP:
            spec = EarconSpec(EarconKind.TRANSITION_UP,
                              _scale_from(config.transition_scale_root_hz),
                              config.transition_note_s)
        elif event.kind is TransitionKind.AP_TO_EP:
            spec = EarconSpec(EarconKind.TRANSITION_DOWN,
                              tuple(reversed(_scale_from(config.transition_scale_root_hz))),
                              config.transition_note_s)
        else:
            continue
        spec.validate()
        specs.append(spec)
    return specs
