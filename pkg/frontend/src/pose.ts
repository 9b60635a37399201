// Rigid-body pose math mirroring the engine: position + unit quaternion
// (w, x, y, z), composed as parent-then-child.

import type { PoseData } from "./protocol.js";

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];

export const IDENTITY_POSE: PoseData = { position: [0, 0, 0], orientation: [1, 0, 0, 0] };

// Hologram base centered over the selection area: 4 cm left of the screen
// center on a ~0.16 m landscape device (matches the engine's default mount).
export const DEFAULT_MOUNT: PoseData = { position: [-0.04, 0, 0], orientation: [1, 0, 0, 0] };

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatNormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  if (!isFinite(n) || n < 1e-12) throw new Error("degenerate quaternion");
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const cx = y * v[2] - z * v[1];
  const cy = z * v[0] - x * v[2];
  const cz = x * v[1] - y * v[0];
  const ccx = y * cz - z * cy;
  const ccy = z * cx - x * cz;
  const ccz = x * cy - y * cx;
  return [v[0] + 2 * (w * cx + ccx), v[1] + 2 * (w * cy + ccy), v[2] + 2 * (w * cz + ccz)];
}

export function quatFromYaw(radians: number): Quat {
  // Rotation about the vertical (+y) axis.
  return [Math.cos(radians / 2), 0, Math.sin(radians / 2), 0];
}

export function compose(parent: PoseData, child: PoseData): PoseData {
  const rotated = quatRotate(parent.orientation as Quat, child.position as Vec3);
  return {
    position: [
      parent.position[0] + rotated[0],
      parent.position[1] + rotated[1],
      parent.position[2] + rotated[2],
    ],
    orientation: quatNormalize(
      quatMultiply(parent.orientation as Quat, child.orientation as Quat),
    ),
  };
}

export function hologramPose(proxy: PoseData, mount: PoseData = DEFAULT_MOUNT): PoseData {
  return compose(proxy, mount);
}
