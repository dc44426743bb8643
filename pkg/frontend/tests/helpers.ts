import type { Plan, StateFrame, SynthValues } from "../src/protocol";

export const THRESHOLDS = {
  working_radius_mm: 20,
  working_angle_deg: 30,
  target_mm: 2,
  target_deg: 1.5,
  transition_mm: 0.5,
  transition_deg: 0.375,
};

export const PLAN: Plan = {
  targets: [
    { label: "L3-left", entry_point: [12, 40, -8], direction: [0, 1, 0] },
    { label: "L3-right", entry_point: [-12, 40, -8], direction: [0, 1, 0] },
  ],
  frame: {
    origin: [0, 0, 0],
    x_axis: [1, 0, 0],
    y_axis: [0, 1, 0],
    z_axis: [0, 0, 1],
  },
  thresholds: THRESHOLDS,
};

export function synth(overrides: Partial<SynthValues> = {}): SynthValues {
  return {
    mode: "pulse_stream",
    fundamental_hz: 1244.5,
    pulse_interval_s: 0.225,
    active_phase: "EP",
    chord_freqs_hz: null,
    ...overrides,
  };
}

export function stateFrame(overrides: Partial<StateFrame> = {}): StateFrame {
  return {
    type: "state",
    seq: 1,
    snapshot: false,
    timestamp_s: 0.02,
    target_id: 0,
    target_label: "L3-left",
    phase: "EP",
    error: { e_x: 3.5, e_y: -1.25, e_phi: 8.0, e_delta: -2.0, d: 3.7165, theta: 8.25 },
    synth: synth(),
    events: [],
    thresholds: THRESHOLDS,
    ...overrides,
  };
}
