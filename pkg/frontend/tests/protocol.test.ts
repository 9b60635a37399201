import { describe, expect, it } from "vitest";

import { decodeFrame, encodeFrame, envelope, type Payload } from "../src/protocol.js";

describe("frame codec", () => {
  it("round-trips every payload kind", () => {
    const payloads: Payload[] = [
      { type: "hello", role: "proxy", capabilities: ["precise_input", "vibrotactile"] },
      { type: "tap_screen", x: 60, y: 40.5 },
      { type: "axis_tap", axis: "year", index: 3 },
      { type: "pose_update", position: [0.1, 0, -0.2], orientation: [1, 0, 0, 0] },
      { type: "project_request", axis: "location", index: 2 },
      { type: "summarize_request" },
      { type: "clear_projection" },
      { type: "ping" },
      { type: "pong" },
    ];
    payloads.forEach((payload, k) => {
      const env = envelope("s1", "ui", k + 1, payload);
      expect(decodeFrame(encodeFrame(env))).toEqual(env);
    });
  });

  it("produces canonical field order", () => {
    const frame = encodeFrame(envelope("s", "ui", 2, { type: "tap_screen", x: 60, y: 40 }));
    expect(frame).toBe(
      '{"v":1,"session":"s","client":"ui","seq":2,"payload":{"type":"tap_screen","x":60,"y":40}}\n',
    );
  });

  it("rejects unsupported versions", () => {
    expect(() => decodeFrame('{"v":99,"session":"s","client":"c","seq":1,"payload":{"type":"ping"}}\n')).toThrow(
      /version/,
    );
  });

  it("rejects frames without a payload type", () => {
    expect(() => decodeFrame('{"v":1,"session":"s","client":"c","seq":1,"payload":{}}\n')).toThrow(
      /payload/,
    );
  });
});
