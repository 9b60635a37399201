"""Shared builders for tests: cubes, screens, and random envelopes."""

from __future__ import annotations

import random

from holoproxy.datacube import CellId, DataCube
from holoproxy.interaction import HapticCommand, PixelRect, ScreenConfig
from holoproxy.pose import Pose
from holoproxy.wire import (
    AXES,
    CAPABILITIES,
    ROLES,
    Ack,
    AxisTap,
    ClearProjection,
    Envelope,
    ErrorReply,
    HapticPulse,
    Hello,
    Payload,
    Ping,
    Pong,
    PoseUpdate,
    ProjectRequest,
    SummarizeRequest,
    TapScreen,
)


def grid_cube(n_locations: int, n_years: int, values=None, **kwargs) -> DataCube:
    """Cube with labels L0.. / Y2000.. and the provided or ramp values."""
    locations = tuple(f"L{i}" for i in range(n_locations))
    years = tuple(str(2000 + j) for j in range(n_years))
    if values is None:
        values = tuple(
            tuple(float(1 + i * n_years + j) for j in range(n_years)) for i in range(n_locations)
        )
    else:
        values = tuple(tuple(float(v) for v in row) for row in values)
    return DataCube(locations=locations, years=years, values=values, **kwargs)


def random_cube(rng: random.Random, max_side: int = 10) -> DataCube:
    n_loc = rng.randint(1, max_side)
    n_year = rng.randint(1, max_side)
    values = tuple(
        tuple(round(rng.uniform(-50.0, 150.0), 6) for _ in range(n_year)) for _ in range(n_loc)
    )
    return grid_cube(n_loc, n_year, values)


def screen_1000x500() -> ScreenConfig:
    return ScreenConfig(
        width_px=1000,
        height_px=500,
        selection_area=PixelRect(0, 0, 500, 500),
        exploration_area=PixelRect(500, 0, 500, 500),
    )


def random_pose(rng: random.Random) -> Pose:
    position = tuple(rng.uniform(-2.0, 2.0) for _ in range(3))
    quat = tuple(rng.uniform(-1.0, 1.0) for _ in range(4))
    while all(abs(c) < 1e-6 for c in quat):
        quat = tuple(rng.uniform(-1.0, 1.0) for _ in range(4))
    return Pose(position=position, orientation=quat)


def _random_token(rng: random.Random) -> str:
    return "".join(rng.choice("abcdefghij0123456789") for _ in range(rng.randint(1, 12)))


def random_payload(rng: random.Random) -> Payload:
    kind = rng.randrange(12)
    if kind == 0:
        caps = frozenset(c for c in CAPABILITIES if rng.random() < 0.5)
        return Hello(role=rng.choice(ROLES), capabilities=caps)
    if kind == 1:
        return TapScreen(x=round(rng.uniform(0, 2000), 3), y=round(rng.uniform(0, 1200), 3))
    if kind == 2:
        return AxisTap(axis=rng.choice(AXES), index=rng.randrange(10))
    if kind == 3:
        return PoseUpdate(pose=random_pose(rng))
    if kind == 4:
        return ProjectRequest(axis=rng.choice(AXES), index=rng.randrange(10))
    if kind == 5:
        return SummarizeRequest()
    if kind == 6:
        return ClearProjection()
    if kind == 7:
        return HapticPulse(
            command=HapticCommand(
                amplitude=round(rng.uniform(0.1, 1.0), 6), duration_ms=rng.randint(1, 2000)
            )
        )
    if kind == 8:
        return Ack(seq=rng.randint(1, 10_000))
    if kind == 9:
        return ErrorReply(code="out_of_bounds_index", detail="index 99", seq=rng.randint(1, 100))
    if kind == 10:
        return Ping()
    return Pong()


def random_envelope(rng: random.Random) -> Envelope:
    return Envelope(
        session_id=_random_token(rng),
        client_id=_random_token(rng),
        seq=rng.randint(1, 1_000_000),
        payload=random_payload(rng),
    )


def cells(*pairs: tuple[int, int]) -> frozenset[CellId]:
    return frozenset(CellId(i, j) for i, j in pairs)
