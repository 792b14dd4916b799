"""On-disk container: the manifest followed by the ciphertext blocks in index order."""

from __future__ import annotations

from typing import Iterable

from . import tlv
from .abe.ciphertext import CiphertextBlock, Manifest, WireError

CONTAINER_MAGIC = b"BKCT"
_MANIFEST = 0x01
_BLOCK = 0x02


def pack_container(manifest: Manifest, blocks: Iterable[CiphertextBlock]) -> bytes:
    records = [(_MANIFEST, manifest.to_bytes())]
    records += [(_BLOCK, b.to_bytes()) for b in blocks]
    return tlv.seal(CONTAINER_MAGIC, records)


def unpack_container(data: bytes) -> tuple[Manifest, list[CiphertextBlock]]:
    """Decode a container. Missing blocks are not an error here; decryption refuses later."""
    records = tlv.open_envelope(data, CONTAINER_MAGIC, {_MANIFEST, _BLOCK})
    if not records or records[0][0] != _MANIFEST:
        raise WireError("container must start with its manifest")
    manifest = Manifest.from_bytes(records[0][1])
    blocks = []
    for tag, value in records[1:]:
        if tag != _BLOCK:
            raise WireError("more than one manifest in container")
        blocks.append(CiphertextBlock.from_bytes(value, manifest.tree_length))
    return manifest, blocks
