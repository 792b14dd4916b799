"""Tag-length-value records inside a magic+version envelope.

Layout: ``magic (4) || version (1) || records``; each record is
``tag (1) || length (4, big-endian) || value``.
"""

from __future__ import annotations

import struct
from typing import Iterable

VERSION = 0x01


class FormatError(ValueError):
    pass


def pack_records(records: Iterable[tuple[int, bytes]]) -> bytes:
    out = bytearray()
    for tag, value in records:
        out += struct.pack(">BI", tag, len(value)) + value
    return bytes(out)


def unpack_records(data: bytes, allowed: set[int]) -> list[tuple[int, bytes]]:
    records = []
    pos = 0
    while pos < len(data):
        if pos + 5 > len(data):
            raise FormatError("truncated record header")
        tag, length = struct.unpack_from(">BI", data, pos)
        pos += 5
        if tag not in allowed:
            raise FormatError(f"unknown tag 0x{tag:02x}")
        if pos + length > len(data):
            raise FormatError("truncated record value")
        records.append((tag, data[pos : pos + length]))
        pos += length
    return records


def seal(magic: bytes, records: Iterable[tuple[int, bytes]]) -> bytes:
    return magic + bytes([VERSION]) + pack_records(records)


def open_envelope(data: bytes, magic: bytes, allowed: set[int]) -> list[tuple[int, bytes]]:
    if len(data) < len(magic) + 1 or data[: len(magic)] != magic:
        raise FormatError(f"not a {magic.decode(errors='replace')} file")
    if data[len(magic)] != VERSION:
        raise FormatError(f"unsupported version {data[len(magic)]}")
    return unpack_records(data[len(magic) + 1 :], allowed)


def single(records: list[tuple[int, bytes]], tag: int) -> bytes:
    values = [v for t, v in records if t == tag]
    if len(values) != 1:
        raise FormatError(f"expected exactly one record with tag 0x{tag:02x}, found {len(values)}")
    return values[0]
