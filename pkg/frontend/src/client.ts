// Phone-proxy emulator client.
//
// Holds no authoritative state: every gesture maps to exactly one protocol
// frame, and the view re-renders only when the server's snapshot or deltas
// arrive (no optimistic updates — the round-trip is deliberately visible).

import {
  decodeFrame,
  encodeFrame,
  envelope,
  type Axis,
  type Envelope,
  type Payload,
  type SessionStateData,
} from "./protocol.js";
import { applyDelta, applySnapshot, stateDigest } from "./state.js";
import { quatFromYaw } from "./pose.js";
import {
  emulatorSkeleton,
  renderEmulator,
  renderHapticPulse,
  type SessionContext,
} from "./view.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface EmulatorOptions {
  url: string;
  sessionId: string;
  clientId?: string;
  socketFactory?: SocketFactory;
  clock?: { setTimeout(fn: () => void, ms: number): unknown };
}

const CAPABILITIES = ["high_res_display", "precise_input", "vibrotactile"];

export class EmulatorClient {
  readonly root: HTMLElement;
  readonly sessionId: string;
  readonly clientId: string;
  private readonly url: string;
  private readonly socketFactory: SocketFactory;
  private readonly clock: { setTimeout(fn: () => void, ms: number): unknown };

  private socket: SocketLike | null = null;
  private seq = 0; // monotone across reconnects; the server dedups by it
  private serverWatermark = 0;
  private inbox = "";

  context: SessionContext | null = null;
  replica: SessionStateData | null = null;
  lastSnapshot: Extract<Payload, { type: "full_snapshot" }> | null = null;
  sentFrames: string[] = [];
  digestText = "";

  constructor(root: HTMLElement, options: EmulatorOptions) {
    this.root = root;
    this.url = options.url;
    this.sessionId = options.sessionId;
    this.clientId = options.clientId ?? `ui-${Math.random().toString(36).slice(2, 8)}`;
    this.socketFactory =
      options.socketFactory ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.clock = options.clock ?? globalThis;
    if (!this.root.querySelector("#screen")) {
      this.root.innerHTML = emulatorSkeleton();
    }
    this.bindControls();
    this.setStatus("disconnected");
  }

  // --- connection -------------------------------------------------------------

  connect(): void {
    this.setStatus("connecting");
    let socket: SocketLike;
    try {
      socket = this.socketFactory(this.url);
    } catch (err) {
      this.showError(`connection failed: ${String(err)}`);
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.sendPayload({ type: "hello", role: "proxy", capabilities: CAPABILITIES });
    };
    socket.onmessage = (event) => this.onSocketData(String(event.data));
    socket.onclose = () => {
      this.setStatus("disconnected");
    };
    socket.onerror = () => {
      this.showError("connection refused or lost");
    };
  }

  reconnect(): void {
    if (this.socket) {
      try {
        this.socket.close();
      } catch {
        // already gone
      }
    }
    // The seq counter keeps rising so redelivered frames stay deduplicable;
    // a fresh snapshot replaces the replica on arrival.
    this.serverWatermark = 0;
    this.connect();
  }

  private onSocketData(data: string): void {
    this.inbox += data;
    let newline = this.inbox.indexOf("\n");
    while (newline >= 0) {
      const line = this.inbox.slice(0, newline + 1);
      this.inbox = this.inbox.slice(newline + 1);
      this.handleFrame(decodeFrame(line));
      newline = this.inbox.indexOf("\n");
    }
  }

  // --- outbound ----------------------------------------------------------------

  private sendPayload(payload: Payload): Envelope {
    if (!this.socket) throw new Error("not connected");
    this.seq += 1;
    const env = envelope(this.sessionId, this.clientId, this.seq, payload);
    const frame = encodeFrame(env);
    this.sentFrames.push(frame);
    this.socket.send(frame);
    return env;
  }

  /** Tap at screen-pixel coordinates (the proxy's own pixel space). */
  tapAt(x: number, y: number): Envelope {
    return this.sendPayload({ type: "tap_screen", x, y });
  }

  tapAxis(axis: Axis, index: number): Envelope {
    return this.sendPayload({ type: "axis_tap", axis, index });
  }

  requestProjection(axis: Axis, index: number): Envelope {
    return this.sendPayload({ type: "project_request", axis, index });
  }

  requestSummary(): Envelope {
    return this.sendPayload({ type: "summarize_request" });
  }

  clearProjection(): Envelope {
    return this.sendPayload({ type: "clear_projection" });
  }

  sendPose(position: [number, number, number], yawDeg: number): Envelope {
    return this.sendPayload({
      type: "pose_update",
      position,
      orientation: quatFromYaw((yawDeg * Math.PI) / 180),
    });
  }

  // --- inbound -------------------------------------------------------------------

  handleFrame(env: Envelope): void {
    if (env.seq <= this.serverWatermark) {
      return; // duplicate delivery
    }
    this.serverWatermark = env.seq;
    const payload = env.payload;
    switch (payload.type) {
      case "full_snapshot":
        this.lastSnapshot = payload;
        this.context = { cube: payload.cube, layout: payload.layout, screen: payload.screen };
        this.replica = applySnapshot(payload);
        this.setStatus("connected");
        this.render();
        break;
      case "state_delta":
        if (this.replica !== null) {
          this.replica = applyDelta(this.replica, payload);
          this.render();
        }
        break;
      case "haptic_pulse":
        renderHapticPulse(this.root, payload.amplitude, payload.duration_ms, this.clock);
        break;
      case "ping":
        this.sendPayload({ type: "pong" });
        break;
      case "error":
        this.showError(`${payload.code}: ${payload.detail}`);
        break;
      case "ack":
      case "pong":
        break;
      default:
        break;
    }
  }

  /** Drop all local caches, then re-apply the latest snapshot (debugging aid
   * and the statelessness contract: the rendered view must be identical). */
  reapplySnapshot(): void {
    const snapshot = this.lastSnapshot;
    if (!snapshot) return;
    this.context = null;
    this.replica = null;
    this.root.querySelector("#selection-grid")!.textContent = "";
    this.context = { cube: snapshot.cube, layout: snapshot.layout, screen: snapshot.screen };
    this.replica = applySnapshot(snapshot);
    this.render();
  }

  // --- rendering -------------------------------------------------------------------

  private render(): void {
    if (!this.context || !this.replica) return;
    renderEmulator(this.root, this.context, this.replica);
    void this.updateDigest();
  }

  private async updateDigest(): Promise<void> {
    if (!this.replica) return;
    const digest = await stateDigest(this.replica);
    this.digestText = digest;
    const el = this.root.querySelector<HTMLElement>("#digest");
    if (el) {
      el.textContent = digest.slice(0, 16);
      el.dataset.digest = digest;
    }
  }

  private setStatus(state: "disconnected" | "connecting" | "connected"): void {
    const el = this.root.querySelector<HTMLElement>("#conn-status");
    if (el) {
      el.dataset.state = state;
      el.textContent = state;
    }
    if (state === "connected") {
      const banner = this.root.querySelector<HTMLElement>("#error-banner");
      if (banner) banner.hidden = true;
    }
  }

  private showError(message: string): void {
    const banner = this.root.querySelector<HTMLElement>("#error-banner");
    if (banner) {
      banner.hidden = false;
      banner.textContent = message;
    }
    this.setStatus("disconnected");
  }

  // --- DOM wiring -----------------------------------------------------------------

  private bindControls(): void {
    const grid = this.root.querySelector<HTMLElement>("#selection-grid");
    grid?.addEventListener("click", (event) => {
      if (!this.context) return;
      const [sx, sy] = this.eventToScreenPixels(event as MouseEvent, grid);
      this.tapAt(sx, sy);
    });

    this.root.querySelector("#year-axis")?.addEventListener("click", (event) => {
      this.onAxisClick(event as MouseEvent);
    });
    this.root.querySelector("#location-axis")?.addEventListener("click", (event) => {
      this.onAxisClick(event as MouseEvent);
    });

    this.root.querySelector("#summarize-btn")?.addEventListener("click", () => {
      if (this.context) this.requestSummary();
    });
    this.root.querySelector("#clear-projection-btn")?.addEventListener("click", () => {
      if (this.context) this.clearProjection();
    });

    const poseInput = () => {
      if (!this.context) return;
      const value = (id: string) =>
        Number(this.root.querySelector<HTMLInputElement>(id)?.value ?? 0);
      this.sendPose([value("#pose-x"), value("#pose-y"), value("#pose-z")], value("#pose-yaw"));
    };
    for (const id of ["#pose-x", "#pose-y", "#pose-z", "#pose-yaw"]) {
      this.root.querySelector(id)?.addEventListener("change", poseInput);
    }
  }

  private onAxisClick(event: MouseEvent): void {
    if (!this.context) return;
    const target = event.target as HTMLElement;
    const chip = target.closest<HTMLElement>(".axis-chip");
    if (!chip) return;
    const axis = chip.dataset.axis as Axis;
    const index = Number(chip.dataset.index);
    if (target.closest(".axis-project")) {
      this.requestProjection(axis, index);
    } else {
      this.tapAxis(axis, index);
    }
  }

  /** Convert a click on the scaled grid into proxy screen pixels. The grid
   * spans exactly the selection area, so the fraction within the grid maps
   * into that area's pixel rect. Without layout metrics (DOM tests), client
   * coordinates are taken as screen pixels directly. */
  private eventToScreenPixels(event: MouseEvent, grid: HTMLElement): [number, number] {
    const ctx = this.context!;
    const [ax, ay, aw, ah] = ctx.screen.selection_area;
    const rect = grid.getBoundingClientRect();
    if (rect.width > 0 && rect.height > 0) {
      const fx = (event.clientX - rect.left) / rect.width;
      const fy = (event.clientY - rect.top) / rect.height;
      return [ax + fx * aw, ay + fy * ah];
    }
    return [event.clientX, event.clientY];
  }
}
