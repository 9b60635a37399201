"""Cross-device interaction engine for smartphone-proxy holographic bar charts.

A core library implementing proxy interaction techniques over a 2.5D bar
chart, an authoritative session server with a framed text protocol, and a
scripted simulation harness with machine-checkable study tasks.
"""

from .datacube import (
    CellId,
    ChartLayout,
    DataCube,
    SummaryStats,
    dump_dataset,
    layout_chart,
    load_dataset,
    summarize,
)
from .interaction import (
    HapticCommand,
    Projection2D,
    ScreenConfig,
    SelectionState,
    axis_select,
    default_screen,
    haptic_encode,
    hit_test_mark,
    project_series,
    toggle_select,
)
from .pose import DEFAULT_MOUNT, MountOffset, Pose, PoseJitter, compose, hologram_pose
from .reducer import apply_delta, apply_snapshot, reduce
from .state import SessionState, initial_state, state_digest
from .wire import Envelope, decode, encode

__version__ = "0.1.0"

__all__ = [
    "CellId",
    "ChartLayout",
    "DataCube",
    "DEFAULT_MOUNT",
    "Envelope",
    "HapticCommand",
    "MountOffset",
    "Pose",
    "PoseJitter",
    "Projection2D",
    "ScreenConfig",
    "SelectionState",
    "SessionState",
    "SummaryStats",
    "apply_delta",
    "apply_snapshot",
    "axis_select",
    "compose",
    "decode",
    "default_screen",
    "dump_dataset",
    "encode",
    "haptic_encode",
    "hit_test_mark",
    "hologram_pose",
    "initial_state",
    "layout_chart",
    "load_dataset",
    "project_series",
    "reduce",
    "state_digest",
    "summarize",
    "toggle_select",
]
