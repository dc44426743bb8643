"""OSC 1.0 message codec (messages only, no bundles).

Wire format: a '/'-prefixed address pattern as a padded C string, a type
tag string starting with ',', then the arguments; everything is 4-byte
aligned and numerics are big-endian. Supported argument types are int32
(i), float32 (f), string (s), and blob (b).

Note that floats travel as IEEE 754 single precision: a message built
from float32-representable values round-trips exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass


class MalformedPacketError(ValueError):
    """Packet violates OSC 1.0 framing (alignment, truncation, bad tags)."""


_INT32_MIN = -(2 ** 31)
_INT32_MAX = 2 ** 31 - 1


@dataclass(frozen=True)
class OscMessage:
    """Address pattern plus typed arguments (int, float, str, bytes)."""

    address: str
    arguments: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "arguments", tuple(self.arguments))


def _pad4(data: bytes) -> bytes:
    return data + b"\x00" * (-len(data) % 4)


def _encode_string(text: str) -> bytes:
    raw = text.encode("utf-8")
    if b"\x00" in raw:
        raise ValueError("OSC strings cannot contain NUL")
    return _pad4(raw + b"\x00")


def encode_osc(message: OscMessage) -> bytes:
    """Serialize a message to wire bytes."""
    if not message.address.startswith("/"):
        raise ValueError(f"address must start with '/': {message.address!r}")
    tags = ","
    payload = b""
    for arg in message.arguments:
        if isinstance(arg, bool):
            raise ValueError("booleans are not an OSC 1.0 argument type here")
        if isinstance(arg, int):
            if not _INT32_MIN <= arg <= _INT32_MAX:
                raise ValueError(f"int argument {arg} outside int32 range")
            tags += "i"
            payload += struct.pack(">i", arg)
        elif isinstance(arg, float):
            tags += "f"
            payload += struct.pack(">f", arg)
        elif isinstance(arg, str):
            tags += "s"
            payload += _encode_string(arg)
        elif isinstance(arg, (bytes, bytearray)):
            tags += "b"
            payload += struct.pack(">i", len(arg)) + _pad4(bytes(arg))
        else:
            raise ValueError(f"unsupported argument type {type(arg).__name__}")
    return _encode_string(message.address) + _encode_string(tags) + payload


def _read_string(data: bytes, offset: int) -> tuple[str, int]:
    end = data.find(b"\x00", offset)
    if end < 0:
        raise MalformedPacketError("unterminated string")
    text = data[offset:end]
    next_offset = offset + ((end - offset) // 4 + 1) * 4
    if next_offset > len(data):
        raise MalformedPacketError("string padding runs past the packet end")
    if any(data[end:next_offset]):
        raise MalformedPacketError("string padding must be NUL bytes")
    try:
        return text.decode("utf-8"), next_offset
    except UnicodeDecodeError as exc:
        raise MalformedPacketError(f"invalid UTF-8 in string: {exc}") from exc


def decode_osc(data: bytes) -> OscMessage:
    """Parse wire bytes into a message.

    Raises MalformedPacketError on misalignment, truncation, unknown type
    tags, or trailing garbage. Unknown addresses are preserved as-is.
    """
    if len(data) % 4 != 0:
        raise MalformedPacketError(f"packet length {len(data)} not 4-byte aligned")
    if not data:
        raise MalformedPacketError("empty packet")
    address, offset = _read_string(data, 0)
    if not address.startswith("/"):
        raise MalformedPacketError(f"address must start with '/': {address!r}")
    tags, offset = _read_string(data, offset)
    if not tags.startswith(","):
        raise MalformedPacketError(f"type tag string must start with ',': {tags!r}")

    arguments: list = []
    for tag in tags[1:]:
        if tag == "i":
            if offset + 4 > len(data):
                raise MalformedPacketError("truncated int32 argument")
            arguments.append(struct.unpack_from(">i", data, offset)[0])
            offset += 4
        elif tag == "f":
            if offset + 4 > len(data):
                raise MalformedPacketError("truncated float32 argument")
            arguments.append(struct.unpack_from(">f", data, offset)[0])
            offset += 4
        elif tag == "s":
            text, offset = _read_string(data, offset)
            arguments.append(text)
        elif tag == "b":
            if offset + 4 > len(data):
                raise MalformedPacketError("truncated blob length")
            size = struct.unpack_from(">i", data, offset)[0]
            if size < 0:
                raise MalformedPacketError(f"negative blob length {size}")
            offset += 4
            end = offset + size
            padded_end = offset + ((size + 3) // 4) * 4
            if padded_end > len(data):
                raise MalformedPacketError("truncated blob payload")
            arguments.append(data[offset:end])
            offset = padded_end
        else:
            raise MalformedPacketError(f"unknown type tag {tag!r}")
    if offset != len(data):
        raise MalformedPacketError(
            f"{len(data) - offset} trailing bytes after arguments")
    return OscMessage(address, tuple(arguments))
