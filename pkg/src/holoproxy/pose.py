"""Rigid-body pose math for the tracked proxy and its mounted hologram.

Replaces the physical marker-tracking pipeline with typed pose input: poses
compose like frames (translation + unit quaternion), and the hologram rides
the proxy through a fixed mount offset. An optional seeded jitter source
emulates tracking noise.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]  # (w, x, y, z)

_NORM_TOL = 1e-9


def _normalized(q: Quat) -> Quat:
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if not math.isfinite(n) or n < 1e-12:
        raise ValueError(f"quaternion {q} cannot be normalized")
    return (w / n, x / n, y / n, z / n)


def quat_multiply(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_rotate(q: Quat, v: Vec3) -> Vec3:
    # v' = v + 2w(u x v) + 2(u x (u x v)), u = quaternion vector part
    w, x, y, z = q
    ux, uy, uz = x, y, z
    cx = uy * v[2] - uz * v[1]
    cy = uz * v[0] - ux * v[2]
    cz = ux * v[1] - uy * v[0]
    ccx = uy * cz - uz * cy
    ccy = uz * cx - ux * cz
    ccz = ux * cy - uy * cx
    return (
        v[0] + 2.0 * (w * cx + ccx),
        v[1] + 2.0 * (w * cy + ccy),
        v[2] + 2.0 * (w * cz + ccz),
    )


def quat_from_axis_angle(axis: Vec3, angle_rad: float) -> Quat:
    ax, ay, az = axis
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n < 1e-12:
        raise ValueError("axis must be non-zero")
    half = angle_rad / 2.0
    s = math.sin(half) / n
    return (math.cos(half), ax * s, ay * s, az * s)


@dataclass(frozen=True)
class Pose:
    """Position in meters plus a unit orientation quaternion (w,x,y,z).

    Construction normalizes the quaternion, so the unit invariant holds for
    every Pose in the program; badly scaled or non-finite input raises.
    """

    position: Vec3 = (0.0, 0.0, 0.0)
    orientation: Quat = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if len(self.position) != 3 or not all(math.isfinite(c) for c in self.position):
            raise ValueError(f"position {self.position} must be 3 finite components")
        if len(self.orientation) != 4 or not all(math.isfinite(c) for c in self.orientation):
            raise ValueError(f"orientation {self.orientation} must be 4 finite components")
        q = self.orientation
        norm = math.sqrt(sum(c * c for c in q))
        if abs(norm - 1.0) > _NORM_TOL:
            object.__setattr__(self, "orientation", _normalized(q))
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        object.__setattr__(self, "orientation", tuple(float(c) for c in self.orientation))


IDENTITY_POSE = Pose()


@dataclass(frozen=True)
class MountOffset:
    """Hologram frame expressed relative to the proxy frame."""

    offset_pose: Pose


# Hologram base centered over the selection area: the left half of a ~0.16 m
# landscape device puts the chart origin 4 cm left of the screen center, flush
# with the glass.
DEFAULT_MOUNT = MountOffset(offset_pose=Pose(position=(-0.04, 0.0, 0.0)))


def compose(parent: Pose, child: Pose) -> Pose:
    """Rigid composition: apply child in the parent's frame."""
    rx, ry, rz = quat_rotate(parent.orientation, child.position)
    position = (
        parent.position[0] + rx,
        parent.position[1] + ry,
        parent.position[2] + rz,
    )
    orientation = _normalized(quat_multiply(parent.orientation, child.orientation))
    return Pose(position=position, orientation=orientation)


def hologram_pose(proxy: Pose, mount: MountOffset = DEFAULT_MOUNT) -> Pose:
    """World pose of the hologram rigidly attached to the proxy."""
    return compose(proxy, mount.offset_pose)


class PoseJitter:
    """Zero-mean Gaussian tracking noise, seeded for reproducibility.

    sigma is the positional std-dev in meters per axis; orientation is
    perturbed about a random axis by an angle with the same sigma in radians.
    sigma = 0 passes poses through untouched.
    """

    def __init__(self, sigma: float = 0.0, seed: int | None = None) -> None:
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        self.sigma = sigma
        self._rng = random.Random(seed)

    def apply(self, pose: Pose) -> Pose:
        if self.sigma == 0.0:
            return pose
        g = self._rng.gauss
        position = (
            pose.position[0] + g(0.0, self.sigma),
            pose.position[1] + g(0.0, self.sigma),
            pose.position[2] + g(0.0, self.sigma),
        )
        axis = (g(0.0, 1.0), g(0.0, 1.0), g(0.0, 1.0))
        if all(abs(c) < 1e-12 for c in axis):
            axis = (1.0, 0.0, 0.0)
        wobble = quat_from_axis_angle(axis, g(0.0, self.sigma))
        orientation = _normalized(quat_multiply(wobble, pose.orientation))
        return Pose(position=position, orientation=orientation)
