// Cross-section panel geometry and drawing. The layout functions are
// pure (tested headless); the draw functions put them on a canvas.
//
// Coronal: crosshair at (e_x, e_y) with the working area, target, and
// transition zones as concentric circles; pixel scale anchors the
// working-area radius to the panel, so an error equal to a threshold
// puts the crosshair exactly on that circle. Axial and sagittal: needle
// against a target cone for e_phi / e_delta.

import type { ErrorValues, StateFrame, Thresholds } from "./protocol.js";

export interface CrosshairLayout {
  xPx: number; // +right
  yPx: number; // +down (screen), e_y positive is up/cranial
  workingPx: number;
  targetPx: number;
  transitionPx: number;
  clamped: boolean;
}

export function crosshairLayout(
  error: Pick<ErrorValues, "e_x" | "e_y">,
  thresholds: Thresholds,
  panelRadiusPx: number,
): CrosshairLayout {
  const pxPerMm = panelRadiusPx / thresholds.working_radius_mm;
  let xPx = error.e_x * pxPerMm;
  let yPx = -error.e_y * pxPerMm;
  const r = Math.hypot(xPx, yPx);
  const clamped = r > panelRadiusPx;
  if (clamped) {
    xPx *= panelRadiusPx / r;
    yPx *= panelRadiusPx / r;
  }
  return {
    xPx,
    yPx,
    workingPx: panelRadiusPx,
    targetPx: thresholds.target_mm * pxPerMm,
    transitionPx: thresholds.transition_mm * pxPerMm,
    clamped,
  };
}

export interface WedgeLayout {
  needleRad: number; // rotation from vertical, +clockwise
  targetRad: number; // half-angle of the target cone
  transitionRad: number;
  clamped: boolean;
}

export function wedgeLayout(
  angleDeg: number,
  thresholds: Thresholds,
  maxNeedleRad = Math.PI / 3,
): WedgeLayout {
  const scale = maxNeedleRad / thresholds.working_angle_deg;
  let needleRad = angleDeg * scale;
  const clamped = Math.abs(needleRad) > maxNeedleRad;
  if (clamped) {
    needleRad = Math.sign(needleRad) * maxNeedleRad;
  }
  return {
    needleRad,
    targetRad: thresholds.target_deg * scale,
    transitionRad: thresholds.transition_deg * scale,
    clamped,
  };
}

export const PHASE_COLORS: Record<string, string> = {
  IP: "#5b6470",
  EP: "#2f81f7",
  AP: "#b07a1f",
  FP: "#2da44e",
};

export function formatValue(value: number, unit: string): string {
  return `${value.toFixed(2)} ${unit}`;
}

// ---------------------------------------------------------------------------
// canvas renderers
// ---------------------------------------------------------------------------

function circle(ctx: CanvasRenderingContext2D, r: number, style: string, width = 1) {
  ctx.beginPath();
  ctx.arc(0, 0, r, 0, 2 * Math.PI);
  ctx.strokeStyle = style;
  ctx.lineWidth = width;
  ctx.stroke();
}

export function drawCoronal(
  ctx: CanvasRenderingContext2D,
  frame: StateFrame,
  flash: boolean,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const radius = Math.min(width, height) / 2 - 12;
  ctx.save();
  ctx.translate(width / 2, height / 2);
  circle(ctx, radius, "#39414d");
  if (frame.error) {
    const layout = crosshairLayout(frame.error, frame.thresholds, radius);
    circle(ctx, layout.targetPx, flash ? "#e3b341" : "#566070");
    circle(ctx, layout.transitionPx, "#2da44e");
    ctx.strokeStyle = frame.phase === "EP" ? "#2f81f7" : "#8b949e";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(layout.xPx - 14, layout.yPx);
    ctx.lineTo(layout.xPx + 14, layout.yPx);
    ctx.moveTo(layout.xPx, layout.yPx - 14);
    ctx.lineTo(layout.xPx, layout.yPx + 14);
    ctx.stroke();
  }
  ctx.restore();
}

export function drawWedge(
  ctx: CanvasRenderingContext2D,
  angleDeg: number,
  thresholds: Thresholds,
  active: boolean,
  flash: boolean,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const layout = wedgeLayout(angleDeg, thresholds);
  const length = Math.min(width, height) - 28;
  ctx.save();
  ctx.translate(width / 2, height - 10);

  const cone = (rad: number, style: string) => {
    ctx.beginPath();
    ctx.moveTo(0, 0);
    ctx.lineTo(length * Math.sin(-rad), -length * Math.cos(rad));
    ctx.lineTo(length * Math.sin(rad), -length * Math.cos(rad));
    ctx.closePath();
    ctx.fillStyle = style;
    ctx.fill();
  };
  cone(layout.targetRad, flash ? "#433a1e" : "#2b313a");
  cone(layout.transitionRad, "#1d3326");

  ctx.beginPath();
  ctx.moveTo(0, 0);
  ctx.lineTo(length * Math.sin(layout.needleRad), -length * Math.cos(layout.needleRad));
  ctx.strokeStyle = active ? "#b07a1f" : "#8b949e";
  ctx.lineWidth = 2.5;
  ctx.stroke();
  ctx.restore();
}
