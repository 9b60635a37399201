"""Headless scripted client for live sessions over TCP.

Connects, joins with a hello handshake, performs one client's scenario script
actions in real time, answers server heartbeats, and reports the final
replica digest after a settle period.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass

from .datacube import CellId
from .reducer import apply_delta, apply_snapshot
from .scenarios import Scenario, ScriptAction
from .state import SessionState, state_digest
from .wire import (
    Ack,
    Envelope,
    ErrorReply,
    FullSnapshot,
    Hello,
    Payload,
    Ping,
    Pong,
    StateDelta,
    TapScreen,
    decode,
    encode,
)


@dataclass
class LiveRunSummary:
    client_id: str
    sent: int
    acked: int
    errors: list[str]
    snapshot_digest: str | None
    final_digest: str | None


class LiveClient:
    def __init__(self, session_id: str, client_id: str, role: str, capabilities=frozenset()):
        self.session_id = session_id
        self.client_id = client_id
        self.role = role
        self.capabilities = frozenset(capabilities)
        self.seq = 0
        self.replica: SessionState | None = None
        self.snapshot: FullSnapshot | None = None
        self.snapshot_digest: str | None = None
        self.server_watermark = 0
        self.acked = 0
        self.errors: list[str] = []
        self._reader: asyncio.StreamReader | None = None
        self._writer: asyncio.StreamWriter | None = None
        self._pump: asyncio.Task | None = None

    async def connect(self, host: str, port: int) -> None:
        self._reader, self._writer = await asyncio.open_connection(
            host, port, limit=2 * 1024 * 1024
        )
        await self._send(Hello(role=self.role, capabilities=self.capabilities))
        # Wait for the snapshot before acting.
        while self.replica is None:
            await self._pump_one()
        self._pump = asyncio.create_task(self._pump_forever())

    async def _send(self, payload: Payload) -> None:
        self.seq += 1
        env = Envelope(self.session_id, self.client_id, self.seq, payload)
        assert self._writer is not None
        self._writer.write(encode(env))
        await self._writer.drain()

    async def _pump_one(self) -> None:
        assert self._reader is not None
        line = await self._reader.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        env = decode(line)
        if env.seq <= self.server_watermark:
            return
        self.server_watermark = env.seq
        payload = env.payload
        if isinstance(payload, FullSnapshot):
            self.snapshot = payload
            self.replica = apply_snapshot(payload)
            self.snapshot_digest = state_digest(self.replica)
        elif isinstance(payload, StateDelta):
            if self.replica is not None:
                self.replica = apply_delta(self.replica, payload)
        elif isinstance(payload, Ack):
            self.acked += 1
        elif isinstance(payload, ErrorReply):
            self.errors.append(f"{payload.code}: {payload.detail}")
        elif isinstance(payload, Ping):
            await self._send(Pong())

    async def _pump_forever(self) -> None:
        try:
            while True:
                await self._pump_one()
        except (ConnectionError, asyncio.CancelledError):
            return

    def resolve_payload(self, action: ScriptAction) -> Payload:
        if action.aimed_cell is None:
            return action.payload
        assert self.snapshot is not None
        layout = self.snapshot.layout
        cell = action.aimed_cell
        if not (0 <= cell.location < layout.n_locations and 0 <= cell.year < layout.n_years):
            raise ValueError(
                f"script cell ({cell.location},{cell.year}) is outside the live "
                f"session's {layout.n_locations}x{layout.n_years} chart; serve the "
                "dataset the scenario was written for"
            )
        return self._tap_for(cell)

    def _tap_for(self, cell: CellId) -> TapScreen:
        rect = self.snapshot.layout.rect(cell)
        area = self.snapshot.screen.selection_area
        return TapScreen(
            x=area.x + (rect.x0 + rect.x1) / 2 * area.width,
            y=area.y + (rect.y0 + rect.y1) / 2 * area.height,
        )

    async def perform(self, action: ScriptAction) -> None:
        await self._send(self.resolve_payload(action))

    async def close(self) -> None:
        if self._pump is not None:
            self._pump.cancel()
            try:
                await self._pump
            except asyncio.CancelledError:
                pass
        if self._writer is not None:
            self._writer.close()
            try:
                await self._writer.wait_closed()
            except (ConnectionError, OSError):
                pass


async def run_scripted_client(
    scenario: Scenario,
    client_id: str,
    host: str,
    port: int,
    session_id: str,
    settle_ms: float = 500.0,
    time_scale: float = 1.0,
) -> LiveRunSummary:
    """Perform one client's actions from a scenario against a live server."""
    spec = next((c for c in scenario.clients if c.client_id == client_id), None)
    if spec is None:
        raise ValueError(f"scenario has no client {client_id!r}")
    actions = [a for a in scenario.script if a.client_id == client_id]

    client = LiveClient(session_id, client_id, spec.role, spec.capabilities)
    await client.connect(host, port)
    sent = 0
    try:
        clock = 0.0
        for action in actions:
            wait = max(0.0, action.at_ms - clock) * time_scale / 1000.0
            if wait:
                await asyncio.sleep(wait)
            clock = max(clock, action.at_ms)
            await client.perform(action)
            sent += 1
        await asyncio.sleep(settle_ms / 1000.0)
    finally:
        await client.close()
    return LiveRunSummary(
        client_id=client_id,
        sent=sent,
        acked=client.acked,
        errors=client.errors,
        snapshot_digest=client.snapshot_digest,
        final_digest=None if client.replica is None else state_digest(client.replica),
    )
