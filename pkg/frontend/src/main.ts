// Wiring: connection -> view state -> panels/readouts/audio, and input
// events -> pose frames back to the engine.

import { WebAudioMirror } from "./audioMirror.js";
import { EngineLink } from "./connection.js";
import { DEFAULT_SETTINGS, InputTracker, TiltKey } from "./input.js";
import { drawCoronal, drawWedge, formatValue, PHASE_COLORS } from "./panels.js";
import { ViewState } from "./state.js";

const $ = (id: string) => document.getElementById(id)!;

const state = new ViewState();
const input = new InputTracker({ ...DEFAULT_SETTINGS });
const mirror = new WebAudioMirror();

const wsUrl = `ws://${location.hostname}:${
  new URLSearchParams(location.search).get("port") ?? "8765"
}`;
const link = new EngineLink(wsUrl, {
  onFrame: (frame) => {
    state.applyFrame(frame, performance.now());
    mirror.applyFrame(frame);
    if (frame.snapshot) populateTargets();
  },
  onStatus: (status) => state.setConnection(status),
  onServerError: (message) => showBanner(`engine: ${message}`),
});

function showBanner(text: string): void {
  const banner = $("banner");
  banner.textContent = text;
  banner.classList.add("visible");
  window.setTimeout(() => banner.classList.remove("visible"), 2500);
}

function populateTargets(): void {
  const select = $("target") as HTMLSelectElement;
  if (!state.plan || select.options.length === state.plan.targets.length) return;
  select.innerHTML = "";
  state.plan.targets.forEach((target, i) => {
    const option = document.createElement("option");
    option.value = String(i);
    option.textContent = target.label;
    select.appendChild(option);
  });
}

// -- input bindings ----------------------------------------------------------

const coronal = $("coronal") as HTMLCanvasElement;
let dragging = false;
coronal.addEventListener("pointerdown", (e) => {
  dragging = true;
  coronal.setPointerCapture(e.pointerId);
});
coronal.addEventListener("pointerup", () => (dragging = false));
coronal.addEventListener("pointermove", (e) => {
  if (dragging) input.applyDrag(e.movementX, e.movementY);
});

const TILT_KEYS: Record<string, TiltKey> = {
  ArrowLeft: "phi-",
  ArrowRight: "phi+",
  ArrowUp: "delta+",
  ArrowDown: "delta-",
};
window.addEventListener("keydown", (e) => {
  const key = TILT_KEYS[e.key];
  if (key) {
    input.keyDown(key);
    e.preventDefault();
  }
});
window.addEventListener("keyup", (e) => {
  const key = TILT_KEYS[e.key];
  if (key) input.keyUp(key);
});

($("target") as HTMLSelectElement).addEventListener("change", (e) => {
  input.selectTarget(Number((e.target as HTMLSelectElement).value));
});
$("reset").addEventListener("click", () => input.reset());
$("audio-toggle").addEventListener("click", async () => {
  if (mirror.running) {
    mirror.stop();
    $("audio-toggle").textContent = "enable audio";
  } else {
    await mirror.start();
    $("audio-toggle").textContent = "mute audio";
  }
});

// settings drawer
$("settings-toggle").addEventListener("click", () =>
  $("settings").classList.toggle("open"),
);
($("gain") as HTMLInputElement).value = String(input.settings.dragGainMmPerPx);
($("tilt-rate") as HTMLInputElement).value = String(input.settings.tiltRateDegPerS);
$("gain").addEventListener("change", (e) => {
  input.settings.dragGainMmPerPx = Number((e.target as HTMLInputElement).value);
});
$("tilt-rate").addEventListener("change", (e) => {
  input.settings.tiltRateDegPerS = Number((e.target as HTMLInputElement).value);
});

// -- render + send loop --------------------------------------------------------

let lastLoopMs = performance.now();

function loop(nowMs: number): void {
  const dtS = Math.min((nowMs - lastLoopMs) / 1000, 0.1);
  lastLoopMs = nowMs;
  input.advance(dtS);
  state.tick(nowMs);

  if (state.plan) {
    const frame = input.frameToSend(state.plan, nowMs);
    if (frame) {
      const sent = link.send(frame);
      state.droppedInput = !sent;
    }
  }

  render();
  requestAnimationFrame(loop);
}

function render(): void {
  const frame = state.lastFrame;
  const status = $("status");
  status.textContent = state.stale
    ? "stale"
    : state.connection === "open"
      ? "live"
      : state.connection;
  status.className = `status ${state.stale ? "stale" : state.connection}`;
  $("dropped").classList.toggle("visible", state.droppedInput);

  const badge = $("phase");
  badge.textContent = frame?.phase ?? "--";
  badge.style.background = PHASE_COLORS[frame?.phase ?? ""] ?? "#333";

  const coronalCtx = coronal.getContext("2d")!;
  if (frame) {
    drawCoronal(coronalCtx, frame, state.flashActive("dimension_reached"));
    const axialCtx = ($("axial") as HTMLCanvasElement).getContext("2d")!;
    const sagittalCtx = ($("sagittal") as HTMLCanvasElement).getContext("2d")!;
    const down = state.flashActive("ap_to_ep") || state.flashActive("fp_to_ap");
    drawWedge(axialCtx, frame.error?.e_phi ?? 0, frame.thresholds,
      frame.phase === "AP", down);
    drawWedge(sagittalCtx, frame.error?.e_delta ?? 0, frame.thresholds,
      frame.phase === "AP", down);
    if (frame.error) {
      $("val-ex").textContent = formatValue(frame.error.e_x, "mm");
      $("val-ey").textContent = formatValue(frame.error.e_y, "mm");
      $("val-d").textContent = formatValue(frame.error.d, "mm");
      $("val-phi").textContent = formatValue(frame.error.e_phi, "deg");
      $("val-delta").textContent = formatValue(frame.error.e_delta, "deg");
      $("val-theta").textContent = formatValue(frame.error.theta, "deg");
    }
    if (frame.synth) {
      $("val-synth").textContent =
        `${frame.synth.fundamental_hz.toFixed(1)} Hz / ` +
        `${frame.synth.pulse_interval_s.toFixed(3)} s`;
    }
  }
}

link.connect();
requestAnimationFrame(loop);
