import random
import struct

import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockabe.chunker import Block, ChunkError, block_size, chain, partition, reassemble, unchain, xor_bytes


def test_single_block_is_header_message_padding():
    (block,) = partition(b"abcd", 1)
    assert block == Block(1, struct.pack(">QB", 4, 1) + b"abcd")


def test_block_size_formula():
    blocks = partition(bytes(100), 4)
    assert block_size(100, 4) == 28
    assert [len(b.data) for b in blocks] == [28] * 4
    assert 4 * 28 >= 100 + 9


def test_chain_example():
    chained = chain([Block(1, bytes.fromhex("6162")), Block(2, bytes.fromhex("6364"))])
    assert [b.data.hex() for b in chained] == ["6162", "0206"]
    assert [b.data.hex() for b in unchain(chained)] == ["6162", "6364"]


def test_chain_degenerate_cases():
    assert chain([Block(1, b"xy")]) == [Block(1, b"xy")]
    same = [Block(i, b"\x07" * 5) for i in range(1, 5)]
    assert all(b.data == bytes(5) for b in chain(same)[1:])


def test_out_of_order_delivery():
    blocks = partition(random.Random(0).randbytes(333), 16)
    chained = chain(blocks)
    shuffled = chained[:]
    random.Random(1).shuffle(shuffled)
    assert unchain(shuffled) == blocks
    assert reassemble(reversed(unchain(shuffled))) == reassemble(blocks)


def test_random_chain_round_trip():
    blocks = [Block(i, random.Random(i).randbytes(64)) for i in range(1, 17)]
    assert unchain(chain(blocks)) == blocks


def test_partition_round_trips_many():
    rng = random.Random(12)
    for _ in range(1000):
        message = rng.randbytes(rng.randrange(0, 300))
        n = rng.randint(1, 40)
        assert reassemble(partition(message, n)) == message


@given(st.binary(max_size=2000), st.integers(1, 64))
def test_partition_chain_round_trip(message, n):
    assert reassemble(unchain(chain(partition(message, n)))) == message


def test_empty_message():
    assert reassemble(partition(b"", 3)) == b""


def test_length_field_larger_than_payload():
    blocks = partition(b"hello", 2)
    framed = bytearray(b"".join(b.data for b in blocks))
    framed[:8] = struct.pack(">Q", 10**6)
    half = len(framed) // 2
    with pytest.raises(ChunkError):
        reassemble([Block(1, bytes(framed[:half])), Block(2, bytes(framed[half:]))])


def test_missing_or_uneven_blocks():
    blocks = partition(b"hello world", 3)
    with pytest.raises(ChunkError):
        reassemble(blocks[:2] + blocks[:1])
    with pytest.raises(ChunkError):
        unchain([blocks[0], blocks[2]])
    with pytest.raises(ChunkError):
        xor_bytes(b"ab", b"abc")
