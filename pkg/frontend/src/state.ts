// Client view state: the latest engine frame verbatim plus connection
// bookkeeping. Panels render exclusively from `lastFrame`, so every
// number on screen is traceable to a received frame field.

import type { Plan, StateFrame } from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface Flash {
  event: string;
  until: number; // ms timestamp
}

const FLASH_MS = 450;
export const STALE_AFTER_MS = 1000;

export class ViewState {
  connection: ConnectionStatus = "connecting";
  stale = false;
  lastFrame: StateFrame | null = null;
  plan: Plan | null = null;
  flashes: Flash[] = [];
  droppedInput = false;
  private lastFrameAt = 0;

  applyFrame(frame: StateFrame, now: number): void {
    this.lastFrame = frame;
    this.lastFrameAt = now;
    this.stale = false;
    if (frame.plan) {
      this.plan = frame.plan;
    }
    for (const event of frame.events) {
      this.flashes.push({ event, until: now + FLASH_MS });
    }
  }

  setConnection(status: ConnectionStatus): void {
    this.connection = status;
    if (status !== "open") {
      this.stale = false; // "stale" only means frames stopped while open
    }
  }

  /** Age flashes and staleness; call once per render tick. */
  tick(now: number): void {
    this.flashes = this.flashes.filter((f) => f.until > now);
    if (this.connection === "open" && this.lastFrame !== null) {
      this.stale = now - this.lastFrameAt > STALE_AFTER_MS;
    }
  }

  flashActive(prefix: string): boolean {
    return this.flashes.some((f) => f.event.startsWith(prefix));
  }
}
