// Virtual-tool pose construction: the steering controls are the four
// task coordinates (entry-plane offsets in mm, two tilt angles in
// degrees); this module turns them into the world pose the engine
// expects. This is input mapping, not error math: displayed numbers
// always come back from engine frames.

import type { Plan, PlanTarget } from "./protocol.js";

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

const DEG = Math.PI / 180;

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function normalize(a: Vec3): Vec3 {
  return scale(a, 1 / norm(a));
}

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatFromAxisAngle(axis: Vec3, angleRad: number): Quat {
  const u = normalize(axis);
  const half = angleRad / 2;
  const s = Math.sin(half);
  return [Math.cos(half), u[0] * s, u[1] * s, u[2] * s];
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const w = q[0];
  const u: Vec3 = [q[1], q[2], q[3]];
  const uv = cross(u, v);
  const uuv = cross(u, uv);
  return add(v, add(scale(uv, 2 * w), scale(uuv, 2)));
}

/** Minimal rotation taking the tool +Z axis onto `axis`. */
export function quatPointing(axis: Vec3): Quat {
  const a = normalize(axis);
  const c = a[2]; // dot with +Z
  if (c > 1 - 1e-12) return [1, 0, 0, 0];
  if (c < -1 + 1e-12) return [0, 1, 0, 0];
  return quatFromAxisAngle([-a[1], a[0], 0], Math.acos(c));
}

/** In-plane basis of a target's entry plane (mirrors the engine's rule:
 * project the anatomical X axis, fall back to Y when parallel). */
export function entryPlaneBasis(plan: Plan, target: PlanTarget): { px: Vec3; py: Vec3 } {
  const n = normalize(target.direction);
  let proj = projectOut(plan.frame.x_axis, n);
  if (norm(proj) < 1e-6) {
    proj = projectOut(plan.frame.y_axis, n);
  }
  const px = normalize(proj);
  const py = cross(n, px);
  return { px, py };
}

function projectOut(v: Vec3, n: Vec3): Vec3 {
  return add(v, scale(n, -dot(v, n)));
}

export interface ToolControls {
  xMm: number;      // along the entry plane's lateral basis vector
  yMm: number;      // along the entry plane's cranial basis vector
  phiDeg: number;   // tilt about the anatomical Z axis
  deltaDeg: number; // tilt about the anatomical X axis
}

/** World pose for the current control state. */
export function controlsToPose(
  plan: Plan,
  targetId: number,
  controls: ToolControls,
): { position: Vec3; orientation: Quat } {
  const target = plan.targets[targetId];
  const { px, py } = entryPlaneBasis(plan, target);
  const position = add(
    target.entry_point,
    add(scale(px, controls.xMm), scale(py, controls.yMm)),
  );
  const tiltPhi = quatFromAxisAngle(plan.frame.z_axis, controls.phiDeg * DEG);
  const tiltDelta = quatFromAxisAngle(plan.frame.x_axis, controls.deltaDeg * DEG);
  const orientation = quatMultiply(
    tiltDelta,
    quatMultiply(tiltPhi, quatPointing(target.direction)),
  );
  return { position, orientation };
}
