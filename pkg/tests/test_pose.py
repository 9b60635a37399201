import math
import random

import numpy as np
import pytest

from holoproxy.pose import (
    DEFAULT_MOUNT,
    IDENTITY_POSE,
    MountOffset,
    Pose,
    PoseJitter,
    compose,
    hologram_pose,
    quat_from_axis_angle,
)

from helpers import random_pose


def quat_to_matrix(q):
    """Reference rotation matrix from a unit quaternion."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def pose_to_homogeneous(pose):
    m = np.eye(4)
    m[:3, :3] = quat_to_matrix(pose.orientation)
    m[:3, 3] = pose.position
    return m


def assert_pose_matches_matrix(pose, matrix, tol=1e-9):
    got = pose_to_homogeneous(pose)
    assert np.max(np.abs(got - matrix)) < tol


class TestPoseType:
    def test_normalizes_orientation(self):
        p = Pose(orientation=(2.0, 0.0, 0.0, 0.0))
        assert p.orientation == (1.0, 0.0, 0.0, 0.0)

    def test_rejects_zero_quaternion(self):
        with pytest.raises(ValueError):
            Pose(orientation=(0.0, 0.0, 0.0, 0.0))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Pose(position=(float("nan"), 0.0, 0.0))

    def test_unit_norm_invariant(self):
        rng = random.Random(1)
        for _ in range(200):
            p = random_pose(rng)
            norm = math.sqrt(sum(c * c for c in p.orientation))
            assert abs(norm - 1.0) <= 1e-9


class TestCompose:
    def test_identity_left_and_right(self):
        rng = random.Random(2)
        for _ in range(20):
            p = random_pose(rng)
            for composed in (compose(IDENTITY_POSE, p), compose(p, IDENTITY_POSE)):
                assert composed.position == pytest.approx(p.position, abs=1e-12)
                assert_pose_matches_matrix(composed, pose_to_homogeneous(p), tol=1e-12)

    def test_pure_translations_add(self):
        a = Pose(position=(1.0, 0.0, 0.0))
        b = Pose(position=(0.0, 1.0, 0.0))
        assert compose(a, b).position == (1.0, 1.0, 0.0)
        assert compose(a, b).orientation == (1.0, 0.0, 0.0, 0.0)

    def test_matches_homogeneous_matrix_oracle(self):
        rng = random.Random(3)
        for _ in range(500):
            a, b = random_pose(rng), random_pose(rng)
            expected = pose_to_homogeneous(a) @ pose_to_homogeneous(b)
            assert_pose_matches_matrix(compose(a, b), expected)

    def test_associativity_via_matrix_oracle(self):
        rng = random.Random(4)
        for _ in range(300):
            a, b, c = (random_pose(rng) for _ in range(3))
            left = compose(compose(a, b), c)
            right = compose(a, compose(b, c))
            assert np.max(
                np.abs(pose_to_homogeneous(left) - pose_to_homogeneous(right))
            ) < 1e-9

    def test_norm_stays_unit_across_chains(self):
        rng = random.Random(5)
        p = random_pose(rng)
        for _ in range(2000):
            p = compose(p, random_pose(rng))
            norm = math.sqrt(sum(c * c for c in p.orientation))
            assert abs(norm - 1.0) <= 1e-9


class TestHologramPose:
    def test_identity_proxy_yields_mount_offset(self):
        mount = MountOffset(offset_pose=Pose(position=(-0.04, 0.0, 0.01)))
        assert hologram_pose(IDENTITY_POSE, mount) == mount.offset_pose

    def test_rotation_swings_mount(self):
        # 90 degrees about the vertical (y) axis carries +x to -z.
        proxy = Pose(orientation=quat_from_axis_angle((0.0, 1.0, 0.0), math.pi / 2))
        mount = MountOffset(offset_pose=Pose(position=(1.0, 0.0, 0.0)))
        hologram = hologram_pose(proxy, mount)
        expected = pose_to_homogeneous(proxy) @ pose_to_homogeneous(mount.offset_pose)
        assert hologram.position == pytest.approx((0.0, 0.0, -1.0), abs=1e-12)
        assert_pose_matches_matrix(hologram, expected)

    def test_translation_equivariance_exact(self):
        # Exact equality needs exact float arithmetic: dyadic positions and a
        # dyadic mount with identity rotation make every addition round-free.
        rng = random.Random(6)
        mount = MountOffset(offset_pose=Pose(position=(-0.0625, 0.0, 0.125)))
        for _ in range(50):
            base = Pose(position=tuple(rng.randrange(-8, 8) / 4 for _ in range(3)))
            delta = tuple(rng.randrange(-8, 8) / 4 for _ in range(3))
            shifted = Pose(position=tuple(b + d for b, d in zip(base.position, delta)))
            h0 = hologram_pose(base, mount)
            h1 = hologram_pose(shifted, mount)
            moved = tuple(a - b for a, b in zip(h1.position, h0.position))
            assert moved == delta
            assert h1.orientation == h0.orientation

    def test_translation_equivariance_general(self):
        # With arbitrary orientations the rotated mount vector is identical on
        # both sides; only addition rounding separates them.
        rng = random.Random(16)
        for _ in range(200):
            base = random_pose(rng)
            delta = tuple(rng.uniform(-1, 1) for _ in range(3))
            shifted = Pose(
                position=tuple(b + d for b, d in zip(base.position, delta)),
                orientation=base.orientation,
            )
            h0 = hologram_pose(base, DEFAULT_MOUNT)
            h1 = hologram_pose(shifted, DEFAULT_MOUNT)
            moved = tuple(a - b for a, b in zip(h1.position, h0.position))
            assert moved == pytest.approx(delta, abs=1e-12)
            assert h1.orientation == h0.orientation


class TestPoseJitter:
    def test_sigma_zero_is_identity(self):
        p = Pose(position=(0.5, 0.25, -1.0))
        assert PoseJitter(0.0, seed=1).apply(p) is p

    def test_seeded_jitter_is_reproducible(self):
        p = Pose(position=(0.5, 0.25, -1.0))
        a = PoseJitter(0.01, seed=42).apply(p)
        b = PoseJitter(0.01, seed=42).apply(p)
        assert a == b
        assert a != p

    def test_jitter_keeps_unit_quaternion(self):
        jitter = PoseJitter(0.05, seed=7)
        rng = random.Random(8)
        for _ in range(200):
            q = jitter.apply(random_pose(rng)).orientation
            assert abs(math.sqrt(sum(c * c for c in q)) - 1.0) <= 1e-9

    def test_jitter_is_roughly_zero_mean(self):
        jitter = PoseJitter(0.02, seed=9)
        base = Pose()
        offsets = np.array([jitter.apply(base).position for _ in range(4000)])
        assert np.all(np.abs(offsets.mean(axis=0)) < 0.002)
        assert np.all(np.abs(offsets.std(axis=0) - 0.02) < 0.003)
