import { describe, expect, it } from "vitest";

import {
  controlsToPose,
  cross,
  dot,
  entryPlaneBasis,
  norm,
  quatPointing,
  quatRotate,
  Vec3,
} from "../src/pose";
import { PLAN } from "./helpers";

function approxEqual(a: Vec3, b: Vec3, tol = 1e-9) {
  expect(Math.hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2])).toBeLessThan(tol);
}

describe("entryPlaneBasis", () => {
  it("projects the anatomical X axis for a +Y target", () => {
    const { px, py } = entryPlaneBasis(PLAN, PLAN.targets[0]);
    approxEqual(px, [1, 0, 0]);
    // right-handed: px x py = direction
    approxEqual(cross(px, py), [0, 1, 0]);
  });

  it("falls back to the Y axis when the direction is along X", () => {
    const plan = {
      ...PLAN,
      targets: [{ label: "t", entry_point: [0, 0, 0], direction: [1, 0, 0] }],
    } as typeof PLAN;
    const { px } = entryPlaneBasis(plan, plan.targets[0]);
    approxEqual(px, [0, 1, 0]);
  });
});

describe("quatPointing", () => {
  it("rotates tool +Z onto the requested axis", () => {
    for (const axis of [[0, 1, 0], [1, 0, 0], [0.3, 0.8, -0.5]] as Vec3[]) {
      const q = quatPointing(axis);
      const pointed = quatRotate(q, [0, 0, 1]);
      const unit = axis.map((v) => v / norm(axis)) as Vec3;
      approxEqual(pointed, unit, 1e-12);
    }
  });
});

describe("controlsToPose", () => {
  it("zero controls sit on the entry point, aligned with the plan", () => {
    const { position, orientation } = controlsToPose(PLAN, 0, {
      xMm: 0, yMm: 0, phiDeg: 0, deltaDeg: 0,
    });
    approxEqual(position, PLAN.targets[0].entry_point);
    approxEqual(quatRotate(orientation, [0, 0, 1]), [0, 1, 0], 1e-12);
  });

  it("x/y controls translate along the plane basis", () => {
    const { position } = controlsToPose(PLAN, 0, {
      xMm: 2, yMm: -3, phiDeg: 0, deltaDeg: 0,
    });
    const { px, py } = entryPlaneBasis(PLAN, PLAN.targets[0]);
    const expected: Vec3 = [
      PLAN.targets[0].entry_point[0] + 2 * px[0] - 3 * py[0],
      PLAN.targets[0].entry_point[1] + 2 * px[1] - 3 * py[1],
      PLAN.targets[0].entry_point[2] + 2 * px[2] - 3 * py[2],
    ];
    approxEqual(position, expected);
  });

  it("tilts rotate the axis about the anatomical axes", () => {
    const phi = controlsToPose(PLAN, 0, { xMm: 0, yMm: 0, phiDeg: 5, deltaDeg: 0 });
    const axis = quatRotate(phi.orientation, [0, 0, 1]);
    // rotation about Z by +5 deg moves +Y toward -X
    expect(axis[2]).toBeCloseTo(0, 10);
    expect(Math.asin(-axis[0]) * (180 / Math.PI)).toBeCloseTo(5, 6);

    const delta = controlsToPose(PLAN, 0, { xMm: 0, yMm: 0, phiDeg: 0, deltaDeg: 4 });
    const axis2 = quatRotate(delta.orientation, [0, 0, 1]);
    expect(axis2[0]).toBeCloseTo(0, 10);
    expect(Math.asin(axis2[2]) * (180 / Math.PI)).toBeCloseTo(4, 6);
  });

  it("keeps the axis unit length under combined tilts", () => {
    const { orientation } = controlsToPose(PLAN, 0, {
      xMm: 4, yMm: 1, phiDeg: 9, deltaDeg: -7,
    });
    expect(norm(quatRotate(orientation, [0, 0, 1]))).toBeCloseTo(1, 12);
    expect(dot(quatRotate(orientation, [0, 0, 1]), [0, 1, 0])).toBeGreaterThan(0.9);
  });
});
