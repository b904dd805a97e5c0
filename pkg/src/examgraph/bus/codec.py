"""Wire codec for the TCP transport: a 4-byte big-endian length prefix
followed by one UTF-8 JSON object with lexicographically sorted keys at
every nesting level. Encoding is canonical: equal messages produce equal
bytes."""

from __future__ import annotations

import json
import struct

from ..errors import FrameTooLarge, MalformedFrame
from .core import Message

MAX_FRAME_BYTES = 16 * 1024 * 1024

_HEADER = struct.Struct(">I")


def encode_frame(message: Message) -> bytes:
    try:
        body = json.dumps(message.to_dict(), sort_keys=True,
                          separators=(",", ":"), ensure_ascii=False,
                          allow_nan=False).encode("utf-8")
    except (TypeError, ValueError) as exc:
        raise MalformedFrame(f"payload is not JSON-representable: {exc}") from exc
    if len(body) > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"frame body is {len(body)} bytes (max {MAX_FRAME_BYTES})")
    return _HEADER.pack(len(body)) + body


def decode_frame(data: bytes) -> Message:
    """Decode one complete frame; trailing bytes are an error (use
    FrameReader for streams)."""
    if len(data) < _HEADER.size:
        raise MalformedFrame(f"truncated header: {len(data)} bytes")
    (length,) = _HEADER.unpack(data[:_HEADER.size])
    if length > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"declared frame of {length} bytes (max {MAX_FRAME_BYTES})")
    body = data[_HEADER.size:]
    if len(body) != length:
        raise MalformedFrame(f"declared {length} body bytes, got {len(body)}")
    return _decode_body(body)


def _decode_body(body: bytes) -> Message:
    try:
        data = json.loads(body.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise MalformedFrame(f"body is not UTF-8: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"body is not JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise MalformedFrame("frame body must be a JSON object")
    missing = {"topic", "correlation_id", "sender", "seq", "payload"} - set(data)
    if missing:
        raise MalformedFrame(f"frame missing keys {sorted(missing)}")
    if not isinstance(data["topic"], str) or not isinstance(data["sender"], str):
        raise MalformedFrame("topic and sender must be strings")
    if not isinstance(data["correlation_id"], str):
        raise MalformedFrame("correlation_id must be a string")
    if not isinstance(data["seq"], int) or isinstance(data["seq"], bool):
        raise MalformedFrame("seq must be an integer")
    return Message.from_dict(data)


class FrameReader:
    """Incremental frame assembly over a byte stream (socket recv chunks)."""

    def __init__(self):
        self._buffer = bytearray()

    def feed(self, chunk: bytes) -> list[Message]:
        self._buffer.extend(chunk)
        messages = []
        while True:
            if len(self._buffer) < _HEADER.size:
                break
            (length,) = _HEADER.unpack(bytes(self._buffer[:_HEADER.size]))
            if length > MAX_FRAME_BYTES:
                raise FrameTooLarge(
                    f"declared frame of {length} bytes (max {MAX_FRAME_BYTES})")
            if len(self._buffer) < _HEADER.size + length:
                break
            body = bytes(self._buffer[_HEADER.size:_HEADER.size + length])
            del self._buffer[:_HEADER.size + length]
            messages.append(_decode_body(body))
        return messages

    @property
    def pending_bytes(self) -> int:
        return len(self._buffer)
