"""Ciphertext blocks, the stream manifest, and their wire encodings.

Block layout::

    id (L_T) || index (4) || C' || has_delta (1) [|| delta_C]
    || leaf_count (2) || { leaf_index (2) || C_hat || C_hat' }*
    || payload_len (4) || payload || has_table (1) [|| table]

Group elements are self-delimiting (a flag byte fixes their width).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .. import tlv
from ..pairing import DecodeError, SourceElement, TargetElement, encoded_size
from ..sharing import MaskedPointTable

KDF_LABEL = b"blockabe payload v1"
AEAD_TAG_BYTES = 16
BOTH_IMAGES = 3
G1_ONLY = 1
E_BYTES = encoded_size(BOTH_IMAGES)

MANIFEST_MAGIC = b"BKMF"


class WireError(ValueError):
    """Bytes do not decode to a well-formed object."""


@dataclass(frozen=True)
class LeafCiphertext:
    index: int
    c_hat: SourceElement  # g^{q_y(0)}
    c_hat_prime: SourceElement  # H(att)^{q_y(0)}


@dataclass(frozen=True)
class CiphertextBlock:
    id: bytes
    index: int
    c_prime: SourceElement  # h^{q_i(0)}
    delta_c: SourceElement | None  # g^{(s_parent - q_i(0)) / q}; absent on block 1
    leaves: tuple[LeafCiphertext, ...]
    payload: bytes
    table: MaskedPointTable | None = None

    def leaf(self, index: int) -> LeafCiphertext | None:
        for lc in self.leaves:
            if lc.index == index:
                return lc
        return None

    def to_bytes(self) -> bytes:
        out = bytearray(self.id)
        out += struct.pack(">I", self.index) + self.c_prime.to_bytes()
        if self.delta_c is None:
            out += b"\x00"
        else:
            out += b"\x01" + self.delta_c.to_bytes()
        out += struct.pack(">H", len(self.leaves))
        for lc in self.leaves:
            out += struct.pack(">H", lc.index) + lc.c_hat.to_bytes() + lc.c_hat_prime.to_bytes()
        out += struct.pack(">I", len(self.payload)) + self.payload
        if self.table is None:
            out += b"\x00"
        else:
            out += b"\x01" + self.table.to_bytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes, id_length: int) -> CiphertextBlock:
        block, end = cls.read(data, 0, id_length)
        if end != len(data):
            raise WireError("trailing bytes after block")
        return block

    @classmethod
    def read(cls, data: bytes, pos: int, id_length: int) -> tuple[CiphertextBlock, int]:
        reader = _Reader(data, pos)
        try:
            block_id = reader.take(id_length)
            (index,) = reader.unpack(">I")
            c_prime = reader.element()
            delta_c = reader.element() if reader.flag() else None
            (count,) = reader.unpack(">H")
            leaves = []
            for _ in range(count):
                (idx,) = reader.unpack(">H")
                leaves.append(LeafCiphertext(idx, reader.element(), reader.element()))
            (plen,) = reader.unpack(">I")
            payload = reader.take(plen)
            table = None
            if reader.flag():
                table, reader.pos = MaskedPointTable.read(data, reader.pos)
        except (struct.error, DecodeError, ValueError) as exc:
            if isinstance(exc, WireError):
                raise
            raise WireError(f"malformed block: {exc}") from None
        if len({lc.index for lc in leaves}) != len(leaves):
            raise WireError("duplicate leaf index in block")
        return cls(block_id, index, c_prime, delta_c, tuple(leaves), payload, table), reader.pos


class _Reader:
    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise WireError("truncated block")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def flag(self) -> bool:
        b = self.take(1)[0]
        if b > 1:
            raise WireError(f"bad presence flag {b}")
        return bool(b)

    def element(self) -> SourceElement:
        if self.pos >= len(self.data):
            raise WireError("truncated block")
        size = encoded_size(self.data[self.pos])
        return SourceElement.from_bytes(self.take(size))


def block_wire_size(
    id_length: int, leaf_count: int, payload_len: int, has_delta: bool, table: MaskedPointTable | None
) -> int:
    """Encoded size of a block with this shape, known before encryption."""
    leaf_rec = 2 + encoded_size(BOTH_IMAGES) + encoded_size(G1_ONLY)
    size = id_length + 4 + encoded_size(BOTH_IMAGES) + 1 + 2 + leaf_count * leaf_rec + 4 + payload_len + 1
    if has_delta:
        size += encoded_size(BOTH_IMAGES)
    if table is not None:
        size += len(table.to_bytes())
    return size


def payload_length(block_bytes: int) -> int:
    return block_bytes + E_BYTES + AEAD_TAG_BYTES


@dataclass(frozen=True)
class Manifest:
    """Everything a receiver needs before the first block: ids, point table, sizes."""

    n: int
    ids: tuple[bytes, ...]
    table: MaskedPointTable
    pk_digest: bytes
    block_sizes: tuple[int, ...] = field(default=())

    @property
    def tree_length(self) -> int:
        return len(self.ids[0])

    @property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for size in self.block_sizes:
            out.append(acc)
            acc += size
        return tuple(out)

    def to_bytes(self) -> bytes:
        return tlv.seal(
            MANIFEST_MAGIC,
            [
                (0x01, struct.pack(">I", self.n)),
                (0x02, struct.pack(">I", self.tree_length)),
                (0x03, b"".join(self.ids)),
                (0x04, self.table.to_bytes()),
                (0x05, self.pk_digest),
                (0x06, b"".join(struct.pack(">I", s) for s in self.block_sizes)),
            ],
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> Manifest:
        try:
            recs = tlv.open_envelope(data, MANIFEST_MAGIC, {1, 2, 3, 4, 5, 6})
            (n,) = struct.unpack(">I", tlv.single(recs, 0x01))
            (length,) = struct.unpack(">I", tlv.single(recs, 0x02))
            joined = tlv.single(recs, 0x03)
            sizes = tlv.single(recs, 0x06)
            table = MaskedPointTable.from_bytes(tlv.single(recs, 0x04))
            pk_digest = tlv.single(recs, 0x05)
        except (struct.error, ValueError) as exc:
            raise WireError(f"malformed manifest: {exc}") from None
        if n < 1 or length < 1 or len(joined) != n * length or len(sizes) != 4 * n:
            raise WireError("manifest fields disagree on the block count")
        ids = tuple(joined[i * length : (i + 1) * length] for i in range(n))
        block_sizes = struct.unpack(f">{n}I", sizes)
        return cls(n, ids, table, pk_digest, tuple(block_sizes))


# -- payload AEAD ---------------------------------------------------------------------


def _aead(mask: TargetElement, index: int, block_id: bytes) -> tuple[AESGCM, bytes, bytes]:
    context = struct.pack(">I", index) + block_id
    okm = HKDF(algorithm=hashes.SHA256(), length=44, salt=None, info=KDF_LABEL + context).derive(
        mask.to_bytes()
    )
    return AESGCM(okm[:32]), okm[32:], context


def seal_payload(mask: TargetElement, index: int, block_id: bytes, plaintext: bytes) -> bytes:
    cipher, nonce, aad = _aead(mask, index, block_id)
    return cipher.encrypt(nonce, plaintext, aad)


def open_payload(mask: TargetElement, index: int, block_id: bytes, payload: bytes) -> bytes | None:
    """Plaintext, or None when the mask is wrong or the payload was altered."""
    cipher, nonce, aad = _aead(mask, index, block_id)
    try:
        return cipher.decrypt(nonce, payload, aad)
    except InvalidTag:
        return None
