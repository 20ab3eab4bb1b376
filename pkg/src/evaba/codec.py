"""Canonical byte encoding used for signing, hashing and the simulator wire.

Every encoded value is a tag byte followed by big-endian fixed-width
integers and length-prefixed byte strings, written in field order.
"""

from __future__ import annotations

import hashlib
import struct

_U8 = struct.Struct(">B")
_U32 = struct.Struct(">I")
_U64 = struct.Struct(">Q")


class DecodeError(ValueError):
    """Raised when bytes do not parse as a canonical encoding."""


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


class Encoder:
    """Append-only canonical writer.

    ``sig_len`` tracks how many of the written bytes belong to signature
    material (shares, combined signatures) so callers can split message
    size into a payload part and a signature part.
    """

    __slots__ = ("_parts", "sig_len")

    def __init__(self, tag: int | None = None):
        self._parts: list[bytes] = []
        self.sig_len = 0
        if tag is not None:
            self.u8(tag)

    def u8(self, v: int) -> "Encoder":
        self._parts.append(_U8.pack(v))
        return self

    def u32(self, v: int) -> "Encoder":
        self._parts.append(_U32.pack(v))
        return self

    def u64(self, v: int) -> "Encoder":
        self._parts.append(_U64.pack(v))
        return self

    def fixed(self, b: bytes) -> "Encoder":
        self._parts.append(b)
        return self

    def blob(self, b: bytes) -> "Encoder":
        self._parts.append(_U32.pack(len(b)))
        self._parts.append(b)
        return self

    def sig_fixed(self, b: bytes) -> "Encoder":
        self.sig_len += len(b)
        return self.fixed(b)

    def sig_blob(self, b: bytes) -> "Encoder":
        self.sig_len += len(b) + 4
        return self.blob(b)

    def bytes(self) -> bytes:
        return b"".join(self._parts)


class Decoder:
    __slots__ = ("_buf", "_pos")

    def __init__(self, buf: bytes):
        self._buf = buf
        self._pos = 0

    def _take(self, k: int) -> bytes:
        end = self._pos + k
        if end > len(self._buf):
            raise DecodeError("truncated input")
        out = self._buf[self._pos:end]
        self._pos = end
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return _U32.unpack(self._take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self._take(8))[0]

    def fixed(self, k: int) -> bytes:
        return self._take(k)

    def blob(self, limit: int = 1 << 20) -> bytes:
        k = self.u32()
        if k > limit:
            raise DecodeError(f"blob length {k} over limit")
        return self._take(k)

    def done(self) -> None:
        if self._pos != len(self._buf):
            raise DecodeError(f"{len(self._buf) - self._pos} trailing bytes")
