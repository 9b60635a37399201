"""Minimal RFC 6455 WebSocket framing: enough to carry newline-terminated
text protocol frames to and from a browser, plus ping/pong/close. No
extensions, no compression, no fragmentation on send."""

from __future__ import annotations

import asyncio
import base64
import hashlib
import os
import struct

GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

MAX_FRAME = 4 * 1024 * 1024


class WsError(Exception):
    pass


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def build_frame(opcode: int, payload: bytes, mask: bool = False) -> bytes:
    head = bytearray()
    head.append(0x80 | (opcode & 0x0F))  # FIN always set
    length = len(payload)
    mask_bit = 0x80 if mask else 0x00
    if length < 126:
        head.append(mask_bit | length)
    elif length < 1 << 16:
        head.append(mask_bit | 126)
        head += struct.pack(">H", length)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", length)
    if mask:
        key = os.urandom(4)
        head += key
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return bytes(head) + payload


def text_frame(data: bytes, mask: bool = False) -> bytes:
    return build_frame(OP_TEXT, data, mask=mask)


async def read_frame(reader: asyncio.StreamReader) -> tuple[int, bytes]:
    """Read one frame; fragmented messages are reassembled into one payload."""
    opcode: int | None = None
    buffer = bytearray()
    while True:
        b1b2 = await reader.readexactly(2)
        fin = bool(b1b2[0] & 0x80)
        op = b1b2[0] & 0x0F
        masked = bool(b1b2[1] & 0x80)
        length = b1b2[1] & 0x7F
        if length == 126:
            length = struct.unpack(">H", await reader.readexactly(2))[0]
        elif length == 127:
            length = struct.unpack(">Q", await reader.readexactly(8))[0]
        if length > MAX_FRAME:
            raise WsError(f"frame of {length} bytes exceeds limit")
        key = await reader.readexactly(4) if masked else None
        payload = await reader.readexactly(length) if length else b""
        if key is not None:
            payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
        if op in (OP_CLOSE, OP_PING, OP_PONG):
            return op, payload  # control frames are never fragmented
        if op == OP_CONT:
            if opcode is None:
                raise WsError("continuation frame without a start frame")
        else:
            opcode = op
        buffer += payload
        if fin:
            assert opcode is not None
            return opcode, bytes(buffer)


def parse_http_head(head: bytes) -> tuple[str, str, dict[str, str]]:
    """Parse a request head into (method, target, lower-cased headers)."""
    try:
        text = head.decode("latin-1")
    except UnicodeDecodeError as exc:
        raise WsError("undecodable request head") from exc
    lines = text.split("\r\n")
    parts = lines[0].split(" ")
    if len(parts) != 3:
        raise WsError(f"bad request line {lines[0]!r}")
    headers: dict[str, str] = {}
    for line in lines[1:]:
        if not line:
            continue
        if ":" not in line:
            raise WsError(f"bad header line {line!r}")
        name, value = line.split(":", 1)
        headers[name.strip().lower()] = value.strip()
    return parts[0], parts[1], headers


def handshake_response(headers: dict[str, str]) -> bytes:
    key = headers.get("sec-websocket-key")
    if not key or headers.get("upgrade", "").lower() != "websocket":
        raise WsError("not a websocket upgrade request")
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(key)}\r\n"
        "\r\n"
    ).encode("ascii")
