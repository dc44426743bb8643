// The four steering controls: pointer drags translate the virtual tip on
// the entry plane (mm per pixel gain), held keys tilt it about the
// axial/sagittal axes (degrees per second). Outbound pose frames are
// rate-limited to the send rate and a keepalive repeats the last pose
// while idle.

import { controlsToPose, ToolControls } from "./pose.js";
import { makePoseFrame, Plan, PoseFrame } from "./protocol.js";

export interface InputSettings {
  dragGainMmPerPx: number;
  tiltRateDegPerS: number;
  sendRateHz: number;
  keepaliveHz: number;
}

export const DEFAULT_SETTINGS: InputSettings = {
  dragGainMmPerPx: 0.2,
  tiltRateDegPerS: 10,
  sendRateHz: 60,
  keepaliveHz: 5,
};

export type TiltKey = "phi-" | "phi+" | "delta-" | "delta+";

export class InputTracker {
  readonly controls: ToolControls = { xMm: 0, yMm: 0, phiDeg: 0, deltaDeg: 0 };
  targetId = 0;
  private held = new Set<TiltKey>();
  private dirty = true;
  private lastSentAt = -Infinity;

  constructor(public settings: InputSettings = { ...DEFAULT_SETTINGS }) {}

  /** Pointer drag in panel pixels (screen y grows downward). */
  applyDrag(dxPx: number, dyPx: number): void {
    this.controls.xMm += dxPx * this.settings.dragGainMmPerPx;
    this.controls.yMm -= dyPx * this.settings.dragGainMmPerPx;
    this.dirty = true;
  }

  keyDown(key: TiltKey): void {
    this.held.add(key);
  }

  keyUp(key: TiltKey): void {
    this.held.delete(key);
  }

  /** Integrate held tilt keys over dt seconds. */
  advance(dtS: number): void {
    if (this.held.size === 0) return;
    const step = this.settings.tiltRateDegPerS * dtS;
    if (this.held.has("phi+")) this.controls.phiDeg += step;
    if (this.held.has("phi-")) this.controls.phiDeg -= step;
    if (this.held.has("delta+")) this.controls.deltaDeg += step;
    if (this.held.has("delta-")) this.controls.deltaDeg -= step;
    this.dirty = true;
  }

  selectTarget(targetId: number): void {
    this.targetId = targetId;
    this.dirty = true;
  }

  reset(): void {
    this.controls.xMm = 0;
    this.controls.yMm = 0;
    this.controls.phiDeg = 0;
    this.controls.deltaDeg = 0;
    this.dirty = true;
  }

  /**
   * Pose frame to send now, or null when rate-limited. Fresh input goes
   * out at up to sendRateHz; unchanged state repeats at keepaliveHz.
   */
  frameToSend(plan: Plan, nowMs: number): PoseFrame | null {
    const sinceMs = nowMs - this.lastSentAt;
    const minGap = this.dirty
      ? 1000 / this.settings.sendRateHz
      : 1000 / this.settings.keepaliveHz;
    if (sinceMs < minGap) return null;
    const { position, orientation } = controlsToPose(plan, this.targetId, this.controls);
    this.lastSentAt = nowMs;
    this.dirty = false;
    return makePoseFrame(this.targetId, position, orientation);
  }
}
