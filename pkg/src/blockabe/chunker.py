"""Message partitioning and XOR chaining of neighbouring blocks.

A message is framed as ``length (8 bytes, big-endian) || version || M``,
zero-padded to ``n * B`` bytes with ``B = ceil((|M| + 9) / n)`` and cut into
``n`` equal blocks ``M_1..M_n``. Chaining publishes ``DB_1 = M_1`` and
``DB_i = M_{i-1} xor M_i``; only someone holding ``DB_1`` can walk the chain.
"""

from __future__ import annotations

import struct
from typing import Iterable, NamedTuple

import numpy as np

FRAME_VERSION = 0x01
HEADER_BYTES = 9


class Block(NamedTuple):
    index: int  # 1-based
    data: bytes


class ChunkError(ValueError):
    pass


def block_size(message_len: int, n: int) -> int:
    return -(-(message_len + HEADER_BYTES) // n)


def partition(message: bytes, n: int) -> list[Block]:
    if n < 1:
        raise ValueError("need at least one block")
    size = block_size(len(message), n)
    framed = struct.pack(">QB", len(message), FRAME_VERSION) + message
    framed += bytes(n * size - len(framed))
    return [Block(i + 1, framed[i * size : (i + 1) * size]) for i in range(n)]


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ChunkError("blocks differ in length")
    return np.bitwise_xor(np.frombuffer(a, np.uint8), np.frombuffer(b, np.uint8)).tobytes()


def _ordered(blocks: Iterable[Block]) -> list[Block]:
    ordered = sorted(blocks, key=lambda b: b.index)
    if [b.index for b in ordered] != list(range(1, len(ordered) + 1)):
        raise ChunkError("blocks must be exactly 1..n, none missing or repeated")
    if len({len(b.data) for b in ordered}) > 1:
        raise ChunkError("blocks differ in length")
    return ordered


def chain(blocks: Iterable[Block]) -> list[Block]:
    plain = _ordered(blocks)
    out = plain[:1]
    for prev, cur in zip(plain, plain[1:]):
        out.append(Block(cur.index, xor_bytes(prev.data, cur.data)))
    return out


def unchain(blocks: Iterable[Block]) -> list[Block]:
    chained = _ordered(blocks)
    out = chained[:1]
    for cur in chained[1:]:
        out.append(Block(cur.index, xor_bytes(cur.data, out[-1].data)))
    return out


def reassemble(blocks: Iterable[Block]) -> bytes:
    framed = b"".join(b.data for b in _ordered(blocks))
    if len(framed) < HEADER_BYTES:
        raise ChunkError("framed message shorter than its header")
    length, version = struct.unpack_from(">QB", framed)
    if version != FRAME_VERSION:
        raise ChunkError(f"unknown frame version {version}")
    if length > len(framed) - HEADER_BYTES:
        raise ChunkError("encoded length exceeds the available bytes")
    return framed[HEADER_BYTES : HEADER_BYTES + length]
