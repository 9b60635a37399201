// Client replica of the session state: snapshots replace it, deltas fold
// into it, and the canonical digest proves convergence with the server.
//
// The digest input is compact JSON with fixed key order where every float is
// its big-endian IEEE-754 hex encoding, so these bytes match the server's
// regardless of runtime number formatting.

import type {
  ChangeData,
  Payload,
  ProjectionData,
  SessionStateData,
  SummaryData,
} from "./protocol.js";

export function cloneState(state: SessionStateData): SessionStateData {
  return JSON.parse(JSON.stringify(state)) as SessionStateData;
}

export function applySnapshot(snapshot: { state: SessionStateData }): SessionStateData {
  return cloneState(snapshot.state);
}

export function applyDelta(
  state: SessionStateData,
  delta: Extract<Payload, { type: "state_delta" }>,
): SessionStateData {
  const next = cloneState(state);
  for (const change of delta.changes) {
    applyChange(next, change);
  }
  next.watermarks[delta.cause.client] = delta.cause.seq;
  return next;
}

function applyChange(state: SessionStateData, change: ChangeData): void {
  switch (change.field) {
    case "selection":
      state.selection = change.cells.map((c) => [c[0], c[1]]);
      break;
    case "pose":
      state.pose = { position: [...change.pose.position], orientation: [...change.pose.orientation] };
      state.pose_writer = { seq: change.writer.seq, client: change.writer.client };
      break;
    case "projection":
      state.projection = change.projection === null ? null : { ...change.projection };
      break;
    case "summary":
      state.summary = change.stats === null ? null : { ...change.stats };
      break;
  }
}

export function isSelected(state: SessionStateData, location: number, year: number): boolean {
  return state.selection.some(([l, y]) => l === location && y === year);
}

// --- canonical digest -----------------------------------------------------------

export function floatHex(x: number): string {
  const buf = new ArrayBuffer(8);
  new DataView(buf).setFloat64(0, x, false);
  return Array.from(new Uint8Array(buf), (b) => b.toString(16).padStart(2, "0")).join("");
}

function projectionCanonical(proj: ProjectionData | null): unknown {
  if (proj === null) return null;
  return {
    axis: proj.axis,
    index: proj.index,
    labels: proj.labels,
    values: proj.values.map(floatHex),
    range: [floatHex(proj.range[0]), floatHex(proj.range[1])],
  };
}

function summaryCanonical(stats: SummaryData | null): unknown {
  if (stats === null) return null;
  const opt = (v: number | null) => (v === null ? null : floatHex(v));
  return {
    count: stats.count,
    min: opt(stats.min),
    max: opt(stats.max),
    mean: opt(stats.mean),
    sum: floatHex(stats.sum),
  };
}

export function canonicalStateText(state: SessionStateData): string {
  const selection = state.selection
    .map(([l, y]) => [l, y] as [number, number])
    .sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  const obj = {
    cube: state.cube_digest,
    selection,
    pose: {
      p: state.pose.position.map(floatHex),
      q: state.pose.orientation.map(floatHex),
    },
    writer: state.pose_writer === null ? null : [state.pose_writer.seq, state.pose_writer.client],
    projection: projectionCanonical(state.projection),
    summary: summaryCanonical(state.summary),
  };
  return JSON.stringify(obj);
}

export async function stateDigest(state: SessionStateData): Promise<string> {
  const bytes = new TextEncoder().encode(canonicalStateText(state));
  const hash = await crypto.subtle.digest("SHA-256", bytes);
  return Array.from(new Uint8Array(hash), (b) => b.toString(16).padStart(2, "0")).join("");
}
