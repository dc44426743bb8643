"""State machine tests: hysteresis, cascades, event edges."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sononav.fsm import (
    AlignmentState,
    Dimension,
    Phase,
    TransitionEvent,
    TransitionKind,
    ZoneThresholds,
    dimension_flags,
    step,
)
from sononav.geometry import ErrorVector

THRESHOLDS = ZoneThresholds()


def err(d=0.0, theta=0.0, e_x=None, e_y=None, e_phi=None, e_delta=None):
    """ErrorVector with d carried by e_x unless components are given."""
    if e_x is None and e_y is None:
        e_x, e_y = d, 0.0
    e_x = e_x or 0.0
    e_y = e_y or 0.0
    if e_phi is None and e_delta is None:
        e_phi, e_delta = theta, 0.0
    return ErrorVector(e_x, e_y, e_phi or 0.0, e_delta or 0.0,
                       math.hypot(e_x, e_y), theta)


def run(states, start=None):
    """Feed a sequence of errors; return (final state, all events)."""
    state = start or AlignmentState.initial()
    events = []
    for e in states:
        state, evs = step(state, e, THRESHOLDS)
        events.extend(evs)
    return state, events


def kinds(events):
    return [e.kind for e in events]


class TestForwardPath:
    def test_stays_in_ip_outside_working_area(self):
        state, events = run([err(d=25.0, theta=20.0)])
        assert state.phase is Phase.IP
        assert events == []

    def test_monotone_convergence_visits_each_phase_once(self):
        # d then theta strictly decreasing to 0
        sequence = [err(d=d, theta=25.0) for d in (30, 15, 5, 1.0, 0.4)]
        sequence += [err(d=0.3, theta=t) for t in (10, 3, 1.0, 0.3)]
        state, events = run(sequence)
        assert state.phase is Phase.FP
        forward = [k for k in kinds(events) if k in (
            TransitionKind.ENTER_EP, TransitionKind.EP_TO_AP, TransitionKind.AP_TO_FP)]
        assert forward == [TransitionKind.ENTER_EP, TransitionKind.EP_TO_AP,
                           TransitionKind.AP_TO_FP]
        backward = [k for k in kinds(events) if k in (
            TransitionKind.AP_TO_EP, TransitionKind.FP_TO_AP, TransitionKind.EXIT_TO_IP)]
        assert backward == []

    def test_ep_to_ap_inside_transition_zone(self):
        state, _ = run([err(d=3.0, theta=25.0)])
        assert state.phase is Phase.EP
        state, events = step(state, err(d=0.4, theta=25.0), THRESHOLDS)
        assert state.phase is Phase.AP
        assert events == [TransitionEvent(TransitionKind.EP_TO_AP)]

    def test_no_promotion_between_transition_and_target(self):
        state, _ = run([err(d=3.0, theta=25.0)])
        state, events = step(state, err(d=1.0, theta=25.0), THRESHOLDS)
        assert state.phase is Phase.EP  # inside target zone but not transition
        assert TransitionKind.EP_TO_AP not in kinds(events)


class TestHysteresis:
    def test_ap_holds_while_d_oscillates_within_target(self):
        state, _ = run([err(d=3.0, theta=25.0), err(d=0.4, theta=25.0)])
        assert state.phase is Phase.AP
        state, events = run([err(d=d, theta=25.0) for d in (0.4, 1.9, 0.4)], start=state)
        assert state.phase is Phase.AP
        assert [k for k in kinds(events) if k is not TransitionKind.DIMENSION_REACHED
                and k is not TransitionKind.DIMENSION_LOST] == []

    def test_ap_demotes_beyond_target(self):
        state, _ = run([err(d=3.0, theta=25.0), err(d=0.4, theta=25.0)])
        state, events = step(state, err(d=2.3, theta=25.0), THRESHOLDS)
        assert state.phase is Phase.EP
        assert TransitionKind.AP_TO_EP in kinds(events)

    def test_boundary_values_hold_phase(self):
        state, _ = run([err(d=3.0, theta=25.0), err(d=0.4, theta=25.0)])
        # exactly at the target boundary: "exit" requires strictly greater
        state, events = step(state, err(d=2.0, theta=25.0), THRESHOLDS)
        assert state.phase is Phase.AP

    def test_fp_demotes_on_angle_exit(self):
        state, _ = run([err(d=0.4, theta=0.2)])
        assert state.phase is Phase.FP
        state, events = step(state, err(d=0.4, theta=1.6), THRESHOLDS)
        assert state.phase is Phase.AP
        assert kinds(events) == [TransitionKind.FP_TO_AP]

    def test_fp_demotes_on_tip_deviation_and_cascades_to_ep(self):
        state, _ = run([err(d=0.4, theta=0.2)])
        state, events = step(state, err(d=2.5, theta=0.2), THRESHOLDS)
        assert state.phase is Phase.EP
        assert kinds(events)[:2] == [TransitionKind.FP_TO_AP, TransitionKind.AP_TO_EP]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.49), min_size=1, max_size=60),
           st.floats(min_value=0.0, max_value=0.45))
    def test_no_chatter_under_jitter(self, jitter, base):
        """After EP->AP, any d sequence staying within (transition, target]
        produces no AP->EP event."""
        state, _ = run([err(d=3.0, theta=25.0), err(d=base, theta=25.0)])
        assert state.phase is Phase.AP
        _, events = run([err(d=min(base + j, 2.0), theta=25.0) for j in jitter],
                        start=state)
        assert TransitionKind.AP_TO_EP not in kinds(events)


class TestCascades:
    def test_far_jump_from_ap_exits_to_ip(self):
        state, _ = run([err(d=3.0, theta=25.0), err(d=0.4, theta=25.0)])
        state, events = step(state, err(d=40.0, theta=25.0), THRESHOLDS)
        assert state.phase is Phase.IP
        assert kinds(events) == [TransitionKind.AP_TO_EP, TransitionKind.EXIT_TO_IP]

    def test_direct_drop_into_transition_zone_promotes_through_ep(self):
        state, events = step(AlignmentState.initial(), err(d=0.3, theta=25.0),
                             THRESHOLDS)
        assert state.phase is Phase.AP
        assert kinds(events)[:2] == [TransitionKind.ENTER_EP, TransitionKind.EP_TO_AP]

    def test_backward_events_only_after_forward(self):
        sequence = [err(d=d, theta=t) for d, t in
                    [(30, 20), (5, 20), (0.4, 20), (0.4, 0.3), (0.4, 1.7),
                     (0.4, 0.3), (2.4, 0.3), (0.4, 20), (0.3, 0.2)]]
        _, events = run(sequence)
        seen = set()
        partner = {TransitionKind.FP_TO_AP: TransitionKind.AP_TO_FP,
                   TransitionKind.AP_TO_EP: TransitionKind.EP_TO_AP,
                   TransitionKind.EXIT_TO_IP: TransitionKind.ENTER_EP}
        for k in kinds(events):
            if k in partner:
                assert partner[k] in seen
            seen.add(k)

    def test_deterministic(self):
        state = AlignmentState(Phase.EP, 3.0, 20.0, (False, False, False, False))
        e = err(d=0.45, theta=12.0)
        assert step(state, e, THRESHOLDS) == step(state, e, THRESHOLDS)


class TestDimensionFlags:
    def test_ep_flags_per_dimension(self):
        flags = dimension_flags(err(e_x=0.1, e_y=5.0), THRESHOLDS, Phase.EP)
        assert flags == (True, False, False, False)

    def test_ap_flags_for_angles(self):
        flags = dimension_flags(err(e_phi=0.0, e_delta=0.0, theta=0.0),
                                THRESHOLDS, Phase.AP)
        assert flags == (False, False, True, True)

    def test_boundary_inclusive(self):
        flags = dimension_flags(err(e_x=2.0, e_y=2.0), THRESHOLDS, Phase.EP)
        assert flags[:2] == (True, True)

    def test_rejected_for_static_phases(self):
        with pytest.raises(ValueError):
            dimension_flags(err(), THRESHOLDS, Phase.IP)

    def test_reached_event_fires_on_rising_edge_only(self):
        state, _ = run([err(e_x=5.0, e_y=5.0, theta=25.0)])
        assert state.phase is Phase.EP
        state, events = step(state, err(e_x=1.0, e_y=5.0, theta=25.0), THRESHOLDS)
        assert events == [TransitionEvent(TransitionKind.DIMENSION_REACHED, Dimension.X)]
        state, events = step(state, err(e_x=0.5, e_y=5.0, theta=25.0), THRESHOLDS)
        assert events == []  # still reached, no re-fire
        state, events = step(state, err(e_x=3.0, e_y=5.0, theta=25.0), THRESHOLDS)
        assert events == [TransitionEvent(TransitionKind.DIMENSION_LOST, Dimension.X)]

    def test_phase_change_tick_emits_no_dimension_events(self):
        # promoting into AP with one angle already at target: transition
        # event only; the fresh flags become the baseline silently
        state, _ = run([err(d=3.0, theta=25.0)])
        state, events = step(
            state, err(d=0.4, e_phi=0.2, e_delta=10.0, theta=10.0), THRESHOLDS)
        assert state.phase is Phase.AP
        assert events == [TransitionEvent(TransitionKind.EP_TO_AP)]
        assert state.at_target == (False, False, True, False)
        # next tick: delta reaching fires, phi (already true) does not re-fire
        state, events = step(
            state, err(d=0.4, e_phi=0.2, e_delta=1.0, theta=1.1), THRESHOLDS)
        assert events == [TransitionEvent(TransitionKind.DIMENSION_REACHED,
                                          Dimension.DELTA)]


class TestValidation:
    def test_nan_error_rejected(self):
        bad = ErrorVector(float("nan"), 0.0, 0.0, 0.0, float("nan"), 0.0)
        with pytest.raises(ValueError):
            step(AlignmentState.initial(), bad, THRESHOLDS)

    def test_threshold_ordering_enforced(self):
        with pytest.raises(ValueError):
            ZoneThresholds(target_mm=0.4)  # below transition default

    def test_event_text_round_trip(self):
        for ev in (TransitionEvent(TransitionKind.EP_TO_AP),
                   TransitionEvent(TransitionKind.DIMENSION_REACHED, Dimension.DELTA)):
            assert TransitionEvent.parse(str(ev)) == ev
