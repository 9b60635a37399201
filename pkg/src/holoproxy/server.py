"""Session hub: the single authority per session, its append-only replay log,
and the network service exposing both transports.

SessionCore is transport-agnostic and synchronous; the simulation harness
drives it directly, and the asyncio service wraps it with one worker task per
session so reductions stay strictly serialized. Connections speak either raw
newline-delimited frames over TCP or the same frames as WebSocket text
messages (the listener sniffs an HTTP upgrade on the shared port, which also
serves the emulator's static assets).

Log format: `#cube`/`#screen` header lines, then one applied wire frame per
line prefixed with its application index, then a `#close <digest>` trailer on
clean shutdown. Replaying the frames from the header state reproduces the
session digest.
"""

from __future__ import annotations

import asyncio
import json
import logging
import secrets
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

from . import ws
from .datacube import ChartLayout, DataCube, layout_chart
from .errors import CorruptLog, DigestMismatch, MalformedFrame
from .interaction import ScreenConfig, default_screen
from .pose import PoseJitter
from .reducer import TO_BROADCAST, TO_PROXIES, TO_SENDER, reduce
from .state import SessionState, initial_state, state_digest
from .wire import (
    SERVER_CLIENT_ID,
    Envelope,
    ErrorReply,
    Hello,
    Ping,
    Pong,
    PoseUpdate,
    decode,
    encode,
    _cube_from,
    _cube_obj,
    _screen_from,
    _screen_obj,
)

log = logging.getLogger(__name__)

DEFAULT_PORT = 7750
PORT_ENV_VAR = "HOLOPROXY_PORT"

HEARTBEAT_INTERVAL = 5.0
SILENCE_TIMEOUT = 15.0


@dataclass
class ClientEntry:
    client_id: str
    role: str
    capabilities: frozenset[str]


class SessionCore:
    """Authoritative state machine for one session (single writer).

    handle() reduces one envelope and resolves outbound addressing against
    the registered clients, assigning every server envelope a fresh seq from
    one monotone counter so each connection observes an increasing
    subsequence.
    """

    def __init__(
        self,
        session_id: str,
        cube: DataCube,
        screen: ScreenConfig | None = None,
        log_stream: IO[str] | None = None,
        pose_jitter: PoseJitter | None = None,
    ) -> None:
        self.session_id = session_id
        self.cube = cube
        self.screen = screen if screen is not None else default_screen()
        self.layout: ChartLayout = layout_chart(cube)
        self.state: SessionState = initial_state(cube)
        self.clients: dict[str, ClientEntry] = {}
        self.applied_count = 0
        self.server_seq = 0
        self.pose_jitter = pose_jitter
        self._log = log_stream
        self._closed = False
        if self._log is not None:
            self._log.write(f"#cube {json.dumps(_cube_obj(cube), separators=(',', ':'))}\n")
            self._log.write(f"#screen {json.dumps(_screen_obj(self.screen), separators=(',', ':'))}\n")
            self._log.flush()

    # -- client registry ------------------------------------------------------

    def register(self, client_id: str, role: str, capabilities: frozenset[str]) -> None:
        self.clients[client_id] = ClientEntry(client_id, role, capabilities)

    def deregister(self, client_id: str) -> None:
        self.clients.pop(client_id, None)

    # -- reduction ------------------------------------------------------------

    def next_seq(self) -> int:
        self.server_seq += 1
        return self.server_seq

    def _server_envelope(self, payload) -> Envelope:
        return Envelope(
            session_id=self.session_id,
            client_id=SERVER_CLIENT_ID,
            seq=self.next_seq(),
            payload=payload,
        )

    def handle(self, env: Envelope) -> list[tuple[str, Envelope]]:
        """Reduce one inbound envelope; returns (destination client, envelope)
        deliveries in emission order."""
        if self.pose_jitter is not None and isinstance(env.payload, PoseUpdate):
            jittered = self.pose_jitter.apply(env.payload.pose)
            env = Envelope(env.session_id, env.client_id, env.seq, PoseUpdate(pose=jittered))
        result = reduce(self.state, env, self.cube, self.layout, self.screen)
        self.state = result.state
        if result.applied:
            self._append_log(env)
            self.applied_count += 1
        deliveries: list[tuple[str, Envelope]] = []
        for outbound in result.outbound:
            out_env = self._server_envelope(outbound.payload)
            if outbound.to == TO_BROADCAST:
                deliveries.extend((cid, out_env) for cid in self.clients)
            elif outbound.to == TO_PROXIES:
                deliveries.extend(
                    (cid, out_env) for cid, entry in self.clients.items() if entry.role == "proxy"
                )
            elif outbound.to == TO_SENDER:
                deliveries.append((env.client_id, out_env))
            else:  # pragma: no cover - exhaustive over addressing
                raise ValueError(f"unknown address {outbound.to!r}")
        return deliveries

    def digest(self) -> str:
        return state_digest(self.state)

    # -- log ------------------------------------------------------------------

    def _append_log(self, env: Envelope) -> None:
        if self._log is None:
            return
        self._log.write(f"{self.applied_count} ")
        self._log.write(encode(env).decode("utf-8"))
        self._log.flush()

    def close_log(self) -> None:
        if self._log is None or self._closed:
            return
        self._log.write(f"#close {self.digest()}\n")
        self._log.flush()
        self._closed = True


# --- replay ------------------------------------------------------------------------


@dataclass
class ReplayResult:
    final_digest: str
    recorded_digest: str | None
    applied_count: int
    state: SessionState
    cube: DataCube
    screen: ScreenConfig

    @property
    def matches(self) -> bool:
        return self.recorded_digest is None or self.recorded_digest == self.final_digest


def replay_log(path: str | Path, dataset: DataCube | None = None, verify: bool = True) -> ReplayResult:
    """Deterministically reconstruct a session from its log.

    Raises CorruptLog on unparseable content and, when verify is set,
    DigestMismatch if the digest recorded at log close disagrees.
    """
    cube: DataCube | None = None
    screen: ScreenConfig | None = None
    recorded: str | None = None
    frames: list[tuple[int, Envelope]] = []
    text = Path(path).read_text(encoding="utf-8")
    if text and not text.endswith("\n"):
        raise CorruptLog("log truncated mid-line")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            if line.startswith("#cube "):
                cube = _cube_from(json.loads(line[len("#cube ") :]))
            elif line.startswith("#screen "):
                screen = _screen_from(json.loads(line[len("#screen ") :]))
            elif line.startswith("#close "):
                recorded = line[len("#close ") :].strip()
            elif line.startswith("#"):
                continue
            else:
                index_text, _, frame_text = line.partition(" ")
                index = int(index_text)
                frames.append((index, decode((frame_text + "\n").encode("utf-8"))))
        except (CorruptLog, DigestMismatch):
            raise
        except Exception as exc:
            raise CorruptLog(f"line {lineno}: {exc}") from exc

    if cube is None:
        if dataset is None:
            raise CorruptLog("log has no #cube header and no dataset was supplied")
        cube = dataset
    core = SessionCore(session_id="replay", cube=cube, screen=screen)
    for expected_index, env in frames:
        if expected_index != core.applied_count:
            raise CorruptLog(
                f"application index {expected_index} out of order (expected {core.applied_count})"
            )
        core.handle(env)
        if core.applied_count != expected_index + 1:
            raise CorruptLog(f"logged frame {expected_index} did not apply on replay")
    final = core.digest()
    if verify and recorded is not None and recorded != final:
        raise DigestMismatch(f"replayed {final}, log recorded {recorded}")
    return ReplayResult(
        final_digest=final,
        recorded_digest=recorded,
        applied_count=core.applied_count,
        state=core.state,
        cube=cube,
        screen=core.screen,
    )


def resume_session(
    path: str | Path, session_id: str | None = None, pose_jitter: PoseJitter | None = None
) -> SessionCore:
    """Rebuild a SessionCore from an abandoned log and reopen it for append.

    The existing file already holds the header and history, so the core is
    built without a log stream (avoiding a second header) and the file is
    attached afterwards in append mode.
    """
    result = replay_log(path, verify=False)
    core = SessionCore(
        session_id=session_id or "resumed",
        cube=result.cube,
        screen=result.screen,
        pose_jitter=pose_jitter,
    )
    core.state = result.state
    core.applied_count = result.applied_count
    core._log = open(path, "a", encoding="utf-8")
    return core


# --- asyncio service -----------------------------------------------------------------


@dataclass
class _Connection:
    conn_id: int
    writer_queue: asyncio.Queue
    transport: str  # "tcp" | "ws"
    client_id: str | None = None
    session_id: str | None = None
    last_seen: float = field(default_factory=time.monotonic)
    closed: bool = False

    def send_frame(self, frame: bytes) -> None:
        if not self.closed:
            self.writer_queue.put_nowait(frame)


class _Session:
    def __init__(self, core: SessionCore) -> None:
        self.core = core
        self.queue: asyncio.Queue = asyncio.Queue()
        self.conns: dict[str, _Connection] = {}
        self.worker: asyncio.Task | None = None


class HoloproxyServer:
    """Hub service: concurrent connections, strictly serialized per-session
    reductions, broadcast fan-out, heartbeats, and append-only logs."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        log_dir: str | Path | None = None,
        ui_dir: str | Path | None = None,
        heartbeat_interval: float = HEARTBEAT_INTERVAL,
        silence_timeout: float = SILENCE_TIMEOUT,
        pose_jitter: PoseJitter | None = None,
    ) -> None:
        self.host = host
        self.port = port
        self.log_dir = Path(log_dir) if log_dir is not None else None
        self.ui_dir = Path(ui_dir).resolve() if ui_dir is not None else None
        self.heartbeat_interval = heartbeat_interval
        self.silence_timeout = silence_timeout
        self.pose_jitter = pose_jitter
        self.sessions: dict[str, _Session] = {}
        self._server: asyncio.AbstractServer | None = None
        self._conn_counter = 0
        self._conn_tasks: set[asyncio.Task] = set()

    # -- sessions --------------------------------------------------------------

    def create_session(
        self, cube: DataCube, screen: ScreenConfig | None = None, session_id: str | None = None
    ) -> str:
        sid = session_id or secrets.token_hex(8)
        if sid in self.sessions:
            raise ValueError(f"session {sid!r} already exists")
        stream = None
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            stream = open(self.log_dir / f"{sid}.log", "w", encoding="utf-8")
        core = SessionCore(
            session_id=sid, cube=cube, screen=screen, log_stream=stream, pose_jitter=self.pose_jitter
        )
        self.sessions[sid] = _Session(core)
        return sid

    def adopt_session(self, core: SessionCore) -> str:
        self.sessions[core.session_id] = _Session(core)
        return core.session_id

    def session_digest(self, sid: str) -> str:
        return self.sessions[sid].core.digest()

    # -- lifecycle ---------------------------------------------------------------

    async def start(self) -> None:
        self._server = await asyncio.start_server(
            self._on_connection, self.host, self.port, limit=2 * 1024 * 1024
        )
        self.port = self._server.sockets[0].getsockname()[1]
        for session in self.sessions.values():
            self._ensure_worker(session)

    def _ensure_worker(self, session: _Session) -> None:
        if session.worker is None:
            session.worker = asyncio.create_task(self._session_worker(session))

    async def stop(self) -> None:
        # Logs must close (digest trailer) even if shutdown is itself
        # cancelled mid-await, so the trailer write sits in the finally.
        try:
            if self._server is not None:
                self._server.close()
                await self._server.wait_closed()
            for task in list(self._conn_tasks):
                task.cancel()
            if self._conn_tasks:
                await asyncio.gather(*self._conn_tasks, return_exceptions=True)
            for session in self.sessions.values():
                if session.worker is not None:
                    session.worker.cancel()
                    try:
                        await session.worker
                    except asyncio.CancelledError:
                        pass
        finally:
            for session in self.sessions.values():
                session.core.close_log()

    # -- session worker ------------------------------------------------------------

    async def _session_worker(self, session: _Session) -> None:
        while True:
            kind, *args = await session.queue.get()
            if kind == "join":
                env, conn = args
                payload: Hello = env.payload
                old = session.conns.get(env.client_id)
                if old is not None and old is not conn:
                    old.closed = True
                    old.writer_queue.put_nowait(None)
                session.core.register(env.client_id, payload.role, payload.capabilities)
                session.conns[env.client_id] = conn
                self._dispatch(session, session.core.handle(env))
            elif kind == "leave":
                client_id, conn = args
                if session.conns.get(client_id) is conn:
                    session.conns.pop(client_id, None)
                    session.core.deregister(client_id)
            elif kind == "env":
                (env,) = args
                self._dispatch(session, session.core.handle(env))

    def _dispatch(self, session: _Session, deliveries: list[tuple[str, Envelope]]) -> None:
        for cid, env in deliveries:
            conn = session.conns.get(cid)
            if conn is not None:
                conn.send_frame(encode(env))

    # -- connection handling ----------------------------------------------------------

    async def _on_connection(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        task = asyncio.current_task()
        if task is not None:
            self._conn_tasks.add(task)
            task.add_done_callback(self._conn_tasks.discard)
        self._conn_counter += 1
        conn = _Connection(self._conn_counter, asyncio.Queue(), "tcp")
        try:
            first = await reader.readexactly(4)
        except (asyncio.IncompleteReadError, ConnectionError):
            writer.close()
            return
        try:
            if first == b"GET ":
                await self._handle_http(first, conn, reader, writer)
            else:
                await self._handle_tcp(first, conn, reader, writer)
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        except Exception:
            log.exception("connection %d failed", conn.conn_id)
        finally:
            await self._drop_connection(conn, writer)

    async def _drop_connection(self, conn: _Connection, writer: asyncio.StreamWriter) -> None:
        conn.closed = True
        if conn.session_id is not None and conn.client_id is not None:
            session = self.sessions.get(conn.session_id)
            if session is not None:
                session.queue.put_nowait(("leave", conn.client_id, conn))
        try:
            writer.close()
            await writer.wait_closed()
        except (ConnectionError, OSError):
            pass

    def _error_frame(self, session_id: str, code: str, detail: str, seq: int = 1) -> bytes:
        env = Envelope(
            session_id=session_id,
            client_id=SERVER_CLIENT_ID,
            seq=max(1, seq),
            payload=ErrorReply(code=code, detail=detail, seq=max(1, seq)),
        )
        return encode(env)

    async def _writer_loop(self, conn: _Connection, writer: asyncio.StreamWriter, as_ws: bool) -> None:
        # Drains until the None sentinel so frames queued just before close
        # (error replies in particular) still reach the peer, then closes the
        # transport, which also unblocks the connection's read loop.
        try:
            while True:
                frame = await conn.writer_queue.get()
                if frame is None:
                    break
                if as_ws:
                    writer.write(ws.text_frame(frame))
                else:
                    writer.write(frame)
                await writer.drain()
        except (ConnectionError, OSError):
            pass
        finally:
            conn.closed = True
            try:
                writer.close()
            except (ConnectionError, OSError):
                pass

    async def _heartbeat_loop(self, conn: _Connection, session: _Session) -> None:
        while not conn.closed:
            await asyncio.sleep(self.heartbeat_interval)
            if conn.closed:
                return
            if time.monotonic() - conn.last_seen > self.silence_timeout:
                conn.closed = True
                conn.writer_queue.put_nowait(None)
                return
            ping = Envelope(
                session_id=session.core.session_id,
                client_id=SERVER_CLIENT_ID,
                seq=session.core.next_seq(),
                payload=Ping(),
            )
            conn.send_frame(encode(ping))

    async def _accept_frame(self, conn: _Connection, frame: bytes) -> bool:
        """Validate and enqueue one inbound frame; False closes the connection."""
        conn.last_seen = time.monotonic()
        try:
            env = decode(frame)
        except MalformedFrame as exc:
            conn.send_frame(self._error_frame("invalid", "protocol_error", str(exc)))
            return False
        except Exception as exc:
            conn.send_frame(self._error_frame("invalid", "protocol_error", str(exc)))
            return False

        if conn.client_id is None:
            if not isinstance(env.payload, Hello):
                conn.send_frame(
                    self._error_frame(env.session_id, "handshake_required", "first message must be hello")
                )
                return False
            session = self.sessions.get(env.session_id)
            if session is None:
                conn.send_frame(
                    self._error_frame(env.session_id, "unknown_session", env.session_id)
                )
                return False
            if env.client_id == SERVER_CLIENT_ID:
                conn.send_frame(
                    self._error_frame(env.session_id, "protocol_error", "client id is reserved")
                )
                return False
            conn.client_id = env.client_id
            conn.session_id = env.session_id
            self._ensure_worker(session)
            session.queue.put_nowait(("join", env, conn))
            hb = asyncio.create_task(self._heartbeat_loop(conn, session))
            self._conn_tasks.add(hb)
            hb.add_done_callback(self._conn_tasks.discard)
            return True

        if env.session_id != conn.session_id or env.client_id != conn.client_id:
            conn.send_frame(
                self._error_frame(
                    conn.session_id, "protocol_error", "session/client id changed mid-connection"
                )
            )
            return False
        session = self.sessions[conn.session_id]
        if isinstance(env.payload, Ping):
            pong = Envelope(
                session_id=conn.session_id,
                client_id=SERVER_CLIENT_ID,
                seq=session.core.next_seq(),
                payload=Pong(),
            )
            conn.send_frame(encode(pong))
            return True
        if isinstance(env.payload, Pong):
            return True
        session.queue.put_nowait(("env", env))
        return True

    # -- raw TCP lane ----------------------------------------------------------------

    async def _handle_tcp(
        self,
        first: bytes,
        conn: _Connection,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
    ) -> None:
        writer_task = asyncio.create_task(self._writer_loop(conn, writer, as_ws=False))
        try:
            pending = bytearray(first)
            while True:
                chunk = await reader.readline()
                if not chunk:
                    break
                pending += chunk
                if not pending.endswith(b"\n"):
                    break  # EOF mid-frame
                if not await self._accept_frame(conn, bytes(pending)):
                    break
                pending = bytearray()
        finally:
            conn.closed = True
            conn.writer_queue.put_nowait(None)
            await writer_task

    # -- HTTP lane: websocket upgrade + static assets ------------------------------------

    async def _handle_http(
        self,
        first: bytes,
        conn: _Connection,
        reader: asyncio.StreamReader,
        writer: asyncio.StreamWriter,
    ) -> None:
        head = bytearray(first)
        while not head.endswith(b"\r\n\r\n"):
            chunk = await reader.read(1)
            if not chunk:
                return
            head += chunk
            if len(head) > 64 * 1024:
                return
        method, target, headers = ws.parse_http_head(bytes(head[:-4]))
        if target.split("?", 1)[0] == "/ws" and "websocket" in headers.get("upgrade", "").lower():
            writer.write(ws.handshake_response(headers))
            await writer.drain()
            conn.transport = "ws"
            await self._handle_ws(conn, reader, writer)
            return
        await self._serve_static(method, target, writer)

    async def _handle_ws(
        self, conn: _Connection, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        writer_task = asyncio.create_task(self._writer_loop(conn, writer, as_ws=True))
        try:
            while True:
                opcode, payload = await ws.read_frame(reader)
                if opcode == ws.OP_CLOSE:
                    writer.write(ws.build_frame(ws.OP_CLOSE, payload[:2]))
                    await writer.drain()
                    break
                if opcode == ws.OP_PING:
                    writer.write(ws.build_frame(ws.OP_PONG, payload))
                    await writer.drain()
                    continue
                if opcode == ws.OP_PONG:
                    conn.last_seen = time.monotonic()
                    continue
                if opcode != ws.OP_TEXT:
                    continue
                if not payload.endswith(b"\n"):
                    payload += b"\n"
                if not await self._accept_frame(conn, payload):
                    break
        except ws.WsError:
            pass
        finally:
            conn.closed = True
            conn.writer_queue.put_nowait(None)
            await writer_task

    _CONTENT_TYPES = {
        ".html": "text/html; charset=utf-8",
        ".js": "text/javascript; charset=utf-8",
        ".mjs": "text/javascript; charset=utf-8",
        ".css": "text/css; charset=utf-8",
        ".map": "application/json",
        ".json": "application/json",
        ".svg": "image/svg+xml",
        ".png": "image/png",
        ".ico": "image/x-icon",
    }

    async def _serve_static(self, method: str, target: str, writer: asyncio.StreamWriter) -> None:
        def respond(status: str, body: bytes, content_type: str = "text/plain") -> None:
            writer.write(
                (
                    f"HTTP/1.1 {status}\r\n"
                    f"Content-Type: {content_type}\r\n"
                    f"Content-Length: {len(body)}\r\n"
                    "Connection: close\r\n\r\n"
                ).encode("ascii")
                + body
            )

        if method != "GET":
            respond("405 Method Not Allowed", b"method not allowed")
            await writer.drain()
            return
        if self.ui_dir is None:
            respond("404 Not Found", b"no ui assets configured")
            await writer.drain()
            return
        path = target.split("?", 1)[0]
        if path == "/":
            path = "/index.html"
        candidate = (self.ui_dir / path.lstrip("/")).resolve()
        if not str(candidate).startswith(str(self.ui_dir)) or not candidate.is_file():
            respond("404 Not Found", b"not found")
        else:
            content_type = self._CONTENT_TYPES.get(candidate.suffix, "application/octet-stream")
            respond("200 OK", candidate.read_bytes(), content_type)
        await writer.drain()
