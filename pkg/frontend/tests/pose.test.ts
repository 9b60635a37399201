import { describe, expect, it } from "vitest";

import {
  DEFAULT_MOUNT,
  IDENTITY_POSE,
  compose,
  hologramPose,
  quatFromYaw,
  quatNormalize,
} from "../src/pose.js";

describe("pose composition", () => {
  it("identity composes to the child", () => {
    const child = { position: [0.1, 0.2, 0.3] as [number, number, number], orientation: quatFromYaw(0.4) };
    const out = compose(IDENTITY_POSE, child);
    expect(out.position).toEqual(child.position);
    out.orientation.forEach((c, k) => expect(c).toBeCloseTo(child.orientation[k], 12));
  });

  it("pure translations add", () => {
    const a = { position: [1, 0, 0] as [number, number, number], orientation: [1, 0, 0, 0] as [number, number, number, number] };
    const b = { position: [0, 1, 0] as [number, number, number], orientation: [1, 0, 0, 0] as [number, number, number, number] };
    expect(compose(a, b).position).toEqual([1, 1, 0]);
  });

  it("yaw 90 degrees carries +x to -z", () => {
    const proxy = { position: [0, 0, 0] as [number, number, number], orientation: quatFromYaw(Math.PI / 2) };
    const mount = { position: [1, 0, 0] as [number, number, number], orientation: [1, 0, 0, 0] as [number, number, number, number] };
    const holo = hologramPose(proxy, mount);
    expect(holo.position[0]).toBeCloseTo(0, 12);
    expect(holo.position[1]).toBeCloseTo(0, 12);
    expect(holo.position[2]).toBeCloseTo(-1, 12);
  });

  it("translating the proxy translates the hologram rigidly", () => {
    const proxy = { position: [0.25, 0, -0.5] as [number, number, number], orientation: quatFromYaw(0.7) };
    const shifted = { ...proxy, position: [0.75, 0.25, -0.25] as [number, number, number] };
    const a = hologramPose(proxy, DEFAULT_MOUNT);
    const b = hologramPose(shifted, DEFAULT_MOUNT);
    expect(b.position[0] - a.position[0]).toBeCloseTo(0.5, 12);
    expect(b.position[1] - a.position[1]).toBeCloseTo(0.25, 12);
    expect(b.position[2] - a.position[2]).toBeCloseTo(0.25, 12);
    expect(b.orientation).toEqual(a.orientation);
  });

  it("normalization keeps unit quaternions", () => {
    const q = quatNormalize([2, 0, 2, 0]);
    expect(Math.hypot(...q)).toBeCloseTo(1, 12);
  });
});
