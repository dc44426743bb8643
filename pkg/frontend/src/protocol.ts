// Wire schema for the engine's state stream. The shapes mirror the JSON
// frames documented in the engine: one state frame per tick, snapshots
// additionally carry the target plan; inbound virtual-pose frames use the
// same fields as the /sononav/pose OSC message.

export interface ErrorValues {
  e_x: number;
  e_y: number;
  e_phi: number;
  e_delta: number;
  d: number;
  theta: number;
}

export interface SynthValues {
  mode: "pulse_stream" | "chord";
  fundamental_hz: number;
  pulse_interval_s: number;
  active_phase: string;
  chord_freqs_hz: number[] | null;
}

export interface Thresholds {
  working_radius_mm: number;
  working_angle_deg: number;
  target_mm: number;
  target_deg: number;
  transition_mm: number;
  transition_deg: number;
}

export interface PlanTarget {
  label: string;
  entry_point: [number, number, number];
  direction: [number, number, number];
}

export interface Plan {
  targets: PlanTarget[];
  frame: {
    origin: [number, number, number];
    x_axis: [number, number, number];
    y_axis: [number, number, number];
    z_axis: [number, number, number];
  };
  thresholds: Thresholds;
}

export interface StateFrame {
  type: "state";
  seq: number;
  snapshot: boolean;
  timestamp_s: number;
  target_id: number;
  target_label: string;
  phase: "IP" | "EP" | "AP" | "FP";
  error: ErrorValues | null;
  synth: SynthValues | null;
  events: string[];
  thresholds: Thresholds;
  plan?: Plan;
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export interface PoseFrame {
  type: "pose";
  target_id: number;
  position: [number, number, number];
  orientation: [number, number, number, number];
}

const PHASES = ["IP", "EP", "AP", "FP"];

function isVec(value: unknown, length: number): boolean {
  return (
    Array.isArray(value) &&
    value.length === length &&
    value.every((v) => typeof v === "number" && Number.isFinite(v))
  );
}

/** Parse and validate an incoming frame; throws on anything malformed. */
export function parseFrame(raw: string): StateFrame | ErrorFrame {
  const data = JSON.parse(raw);
  if (typeof data !== "object" || data === null) {
    throw new Error("frame must be a JSON object");
  }
  if (data.type === "error") {
    if (typeof data.message !== "string") throw new Error("error frame needs a message");
    return data as ErrorFrame;
  }
  if (data.type !== "state") {
    throw new Error(`unknown frame type ${String(data.type)}`);
  }
  if (!PHASES.includes(data.phase)) {
    throw new Error(`unknown phase ${String(data.phase)}`);
  }
  if (typeof data.seq !== "number" || typeof data.timestamp_s !== "number") {
    throw new Error("state frame needs seq and timestamp_s");
  }
  if (data.error !== null) {
    for (const key of ["e_x", "e_y", "e_phi", "e_delta", "d", "theta"]) {
      if (typeof data.error?.[key] !== "number") {
        throw new Error(`state frame error is missing ${key}`);
      }
    }
  }
  if (!Array.isArray(data.events)) throw new Error("state frame needs events");
  if (typeof data.thresholds?.working_radius_mm !== "number") {
    throw new Error("state frame needs thresholds");
  }
  return data as StateFrame;
}

export function makePoseFrame(
  targetId: number,
  position: [number, number, number],
  orientation: [number, number, number, number],
): PoseFrame {
  if (!isVec(position, 3) || !isVec(orientation, 4)) {
    throw new Error("pose frame needs a 3-vector position and quaternion");
  }
  return { type: "pose", target_id: targetId, position, orientation };
}
