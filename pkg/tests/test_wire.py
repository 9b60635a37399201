import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoproxy.datacube import CellId, layout_chart
from holoproxy.errors import (
    IncompleteFrame,
    MalformedFrame,
    UnknownPayloadTag,
    UnsupportedVersion,
)
from holoproxy.interaction import default_screen
from holoproxy.pose import Pose
from holoproxy.state import initial_state
from holoproxy.wire import (
    Ack,
    AxisTap,
    Envelope,
    FullSnapshot,
    Hello,
    PoseChange,
    SelectionChange,
    StateDelta,
    SummaryChange,
    ProjectionChange,
    TapScreen,
    decode,
    encode,
)

from helpers import grid_cube, random_envelope

FIXTURES = Path(__file__).parent / "fixtures"


class TestRoundTrip:
    def test_thousand_random_envelopes(self):
        rng = random.Random(20240501)
        for _ in range(1000):
            env = random_envelope(rng)
            assert decode(encode(env)) == env

    def test_snapshot_roundtrip(self):
        cube = grid_cube(3, 4)
        env = Envelope(
            session_id="s1",
            client_id="server",
            seq=1,
            payload=FullSnapshot(
                state=initial_state(cube),
                cube=cube,
                layout=layout_chart(cube),
                screen=default_screen(),
            ),
        )
        assert decode(encode(env)) == env

    def test_delta_roundtrip_all_change_kinds(self):
        from holoproxy.datacube import summarize
        from holoproxy.interaction import project_series

        cube = grid_cube(2, 3)
        env = Envelope(
            session_id="s1",
            client_id="server",
            seq=9,
            payload=StateDelta(
                cause=("c1", 4),
                changes=(
                    SelectionChange(cells=(CellId(0, 1), CellId(1, 2))),
                    PoseChange(pose=Pose(position=(1.5, 0.0, -0.25)), writer=(4, "c1")),
                    ProjectionChange(projection=project_series(cube, "year", 1)),
                    SummaryChange(stats=summarize(cube, [CellId(0, 1)])),
                    SummaryChange(stats=None),
                    ProjectionChange(projection=None),
                ),
            ),
        )
        assert decode(encode(env)) == env

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**63))
    def test_roundtrip_property(self, seed):
        env = random_envelope(random.Random(seed))
        assert decode(encode(env)) == env

    def test_encoding_is_deterministic(self):
        rng1, rng2 = random.Random(77), random.Random(77)
        for _ in range(100):
            assert encode(random_envelope(rng1)) == encode(random_envelope(rng2))


class TestGoldenFrames:
    def test_hello_fixture(self):
        env = Envelope(
            session_id="s-golden",
            client_id="phone-1",
            seq=1,
            payload=Hello(
                role="proxy",
                capabilities=frozenset({"precise_input", "vibrotactile", "high_res_display"}),
            ),
        )
        assert encode(env) == (FIXTURES / "hello.frame").read_bytes()

    def test_tap_fixture(self):
        env = Envelope(
            session_id="s-golden", client_id="phone-1", seq=2, payload=TapScreen(x=60.0, y=40.5)
        )
        assert encode(env) == (FIXTURES / "tap.frame").read_bytes()

    def test_delta_fixture(self):
        frame = (FIXTURES / "delta.frame").read_bytes()
        assert encode(decode(frame)) == frame

    def test_snapshot_fixture(self):
        frame = (FIXTURES / "snapshot.frame").read_bytes()
        env = decode(frame)
        assert isinstance(env.payload, FullSnapshot)
        assert encode(env) == frame


class TestDecodeErrors:
    def test_missing_terminator(self):
        frame = encode(Envelope("s", "c", 1, Ack(seq=1)))
        with pytest.raises(IncompleteFrame):
            decode(frame[:-1])

    def test_unknown_payload_tag(self):
        frame = b'{"v":1,"session":"s","client":"c","seq":1,"payload":{"type":"warp_drive"}}\n'
        with pytest.raises(UnknownPayloadTag):
            decode(frame)

    def test_unsupported_version(self):
        frame = b'{"v":999,"session":"s","client":"c","seq":1,"payload":{"type":"ack","seq":1}}\n'
        with pytest.raises(UnsupportedVersion):
            decode(frame)

    def test_not_json(self):
        with pytest.raises(MalformedFrame):
            decode(b"hello world\n")

    def test_extra_envelope_key(self):
        frame = b'{"v":1,"session":"s","client":"c","seq":1,"evil":1,"payload":{"type":"ack","seq":1}}\n'
        with pytest.raises(MalformedFrame):
            decode(frame)

    def test_missing_payload_field(self):
        frame = b'{"v":1,"session":"s","client":"c","seq":1,"payload":{"type":"axis_tap","axis":"year"}}\n'
        with pytest.raises(MalformedFrame):
            decode(frame)

    def test_bad_axis_value(self):
        frame = (
            b'{"v":1,"session":"s","client":"c","seq":1,'
            b'"payload":{"type":"axis_tap","axis":"diagonal","index":0}}\n'
        )
        with pytest.raises(MalformedFrame):
            decode(frame)

    def test_unknown_capability(self):
        frame = (
            b'{"v":1,"session":"s","client":"c","seq":1,'
            b'"payload":{"type":"hello","role":"proxy","capabilities":["telepathy"]}}\n'
        )
        with pytest.raises(MalformedFrame):
            decode(frame)

    def test_zero_seq_rejected(self):
        frame = b'{"v":1,"session":"s","client":"c","seq":0,"payload":{"type":"ack","seq":1}}\n'
        with pytest.raises(MalformedFrame):
            decode(frame)

    def test_non_finite_amplitude_rejected(self):
        frame = (
            b'{"v":1,"session":"s","client":"c","seq":1,'
            b'"payload":{"type":"haptic_pulse","amplitude":2.5,"duration_ms":150}}\n'
        )
        with pytest.raises(MalformedFrame):
            decode(frame)

    def test_multiline_frame_rejected(self):
        a = encode(Envelope("s", "c", 1, Ack(seq=1)))
        b = encode(Envelope("s", "c", 2, Ack(seq=2)))
        with pytest.raises(MalformedFrame):
            decode(a + b)


class TestEnvelopeValidation:
    def test_rejects_empty_ids(self):
        with pytest.raises(ValueError):
            Envelope("", "c", 1, Ack(seq=1))

    def test_rejects_newline_in_id(self):
        with pytest.raises(ValueError):
            Envelope("s", "c\n", 1, Ack(seq=1))

    def test_bad_role(self):
        with pytest.raises(ValueError):
            Hello(role="pilot")

    def test_axis_tap_validates_axis(self):
        with pytest.raises(ValueError):
            AxisTap(axis="up", index=0)
