// Engine link: WebSocket with reconnect backoff. Frames are parsed and
// handed to callbacks; send() drops (and reports) input while the link
// is down. The socket constructor is injectable so the reconnect logic
// is testable off-browser.

import { parseFrame, PoseFrame, StateFrame } from "./protocol.js";

export interface LinkCallbacks {
  onFrame: (frame: StateFrame) => void;
  onStatus: (status: "connecting" | "open" | "closed") => void;
  onServerError?: (message: string) => void;
}

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  readyState: number;
  send(data: string): void;
  close(): void;
}

const OPEN_STATE = 1; // WebSocket.OPEN
const BACKOFF_START_MS = 500;
const BACKOFF_MAX_MS = 5000;

export class EngineLink {
  private ws: SocketLike | null = null;
  private backoffMs = BACKOFF_START_MS;
  private closed = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly callbacks: LinkCallbacks,
    private readonly socketFactory: (url: string) => SocketLike = (u) =>
      new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    this.callbacks.onStatus("connecting");
    const ws = this.socketFactory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoffMs = BACKOFF_START_MS;
      this.callbacks.onStatus("open");
    };
    ws.onmessage = (event) => {
      try {
        const frame = parseFrame(String(event.data));
        if (frame.type === "error") {
          this.callbacks.onServerError?.(frame.message);
        } else {
          this.callbacks.onFrame(frame);
        }
      } catch (exc) {
        this.callbacks.onServerError?.(String(exc));
      }
    };
    ws.onclose = () => {
      this.ws = null;
      this.callbacks.onStatus("closed");
      if (!this.closed) {
        this.retryTimer = setTimeout(() => this.open(), this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
      }
    };
    ws.onerror = () => ws.close();
  }

  /** True when the frame went out; false means it was dropped offline. */
  send(frame: PoseFrame): boolean {
    if (!this.ws || this.ws.readyState !== OPEN_STATE) {
      return false;
    }
    this.ws.send(JSON.stringify(frame));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.ws?.close();
  }
}
