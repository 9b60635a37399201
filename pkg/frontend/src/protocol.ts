// Wire protocol mirror (version 1): one compact JSON object per frame,
// newline-terminated. Field order matches docs/protocol.md so frames this
// client produces are canonical.

export const PROTOCOL_VERSION = 1;

export type Axis = "location" | "year";
export type Role = "proxy" | "renderer" | "observer";

export interface CubeData {
  locations: string[];
  years: string[];
  values: number[][]; // values[location][year]
  measure: string;
  unit: string;
}

export type RectData = [number, number, number, number]; // x0, y0, x1, y1 (normalized)

export interface LayoutData {
  cube_digest: string;
  heights: number[][];
  rects: RectData[][];
}

export type PixelRectData = [number, number, number, number]; // x, y, w, h

export interface ScreenData {
  width: number;
  height: number;
  selection_area: PixelRectData;
  exploration_area: PixelRectData;
}

export interface PoseData {
  position: [number, number, number];
  orientation: [number, number, number, number]; // w, x, y, z
}

export interface ProjectionData {
  axis: Axis;
  index: number;
  labels: string[];
  values: number[];
  range: [number, number];
}

export interface SummaryData {
  count: number;
  min: number | null;
  max: number | null;
  mean: number | null;
  sum: number;
}

export interface PoseWriterData {
  seq: number;
  client: string;
}

export interface SessionStateData {
  cube_digest: string;
  selection: [number, number][];
  pose: PoseData;
  pose_writer: PoseWriterData | null;
  projection: ProjectionData | null;
  summary: SummaryData | null;
  watermarks: Record<string, number>;
}

export type ChangeData =
  | { field: "selection"; cells: [number, number][] }
  | { field: "pose"; pose: PoseData; writer: PoseWriterData }
  | { field: "projection"; projection: ProjectionData | null }
  | { field: "summary"; stats: SummaryData | null };

export type Payload =
  | { type: "hello"; role: Role; capabilities: string[] }
  | { type: "tap_screen"; x: number; y: number }
  | { type: "axis_tap"; axis: Axis; index: number }
  | ({ type: "pose_update" } & PoseData)
  | { type: "project_request"; axis: Axis; index: number }
  | { type: "summarize_request" }
  | { type: "clear_projection" }
  | { type: "haptic_pulse"; amplitude: number; duration_ms: number }
  | { type: "ack"; seq: number }
  | { type: "error"; code: string; detail: string; seq: number }
  | { type: "ping" }
  | { type: "pong" }
  | { type: "state_delta"; cause: { client: string; seq: number }; changes: ChangeData[] }
  | {
      type: "full_snapshot";
      state: SessionStateData;
      cube: CubeData;
      layout: LayoutData;
      screen: ScreenData;
    };

export interface Envelope {
  v: number;
  session: string;
  client: string;
  seq: number;
  payload: Payload;
}

export function envelope(session: string, client: string, seq: number, payload: Payload): Envelope {
  return { v: PROTOCOL_VERSION, session, client, seq, payload };
}

export function encodeFrame(env: Envelope): string {
  // Insertion order of the literals above is the canonical field order.
  return JSON.stringify(env) + "\n";
}

export function decodeFrame(raw: string): Envelope {
  const text = raw.endsWith("\n") ? raw.slice(0, -1) : raw;
  const obj = JSON.parse(text) as Envelope;
  if (obj.v !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${obj.v}`);
  }
  if (typeof obj.session !== "string" || typeof obj.client !== "string") {
    throw new Error("frame missing session/client");
  }
  if (!Number.isInteger(obj.seq) || obj.seq < 1) {
    throw new Error("frame missing positive seq");
  }
  if (typeof obj.payload !== "object" || obj.payload === null || !("type" in obj.payload)) {
    throw new Error("frame missing payload type");
  }
  return obj;
}
