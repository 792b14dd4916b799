"""Decryption: attribute pre-check, tree integrity, and per-block unlocking.

A block can be opened two ways:

* ABE path: recombine leaf pairings up to the block's own gate and unmask
  with the attribute key.
* SYM path: step down from the already-opened parent block using the
  published difference ``delta_C`` and the key's ``D_hat`` component.

:class:`DecryptionSession` accepts blocks as they arrive, opens whatever
became reachable, and prefers the ABE path when both are available.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..chunker import Block, ChunkError, reassemble, unchain
from ..pairing import DecodeError, SourceElement, TargetElement, pair
from ..policy import AccessTree, SubTreePolicy, TreeDecodeError, enumerate_blocks, parse_serialized
from ..sharing import (
    InsufficientShares,
    MaskedPointTable,
    join_limbs,
    lagrange_coeff,
    lookup_points,
    shamir_recover,
    xor_recover,
)
from .ciphertext import E_BYTES, CiphertextBlock, Manifest, open_payload
from .keys import AttributeKey, PublicParams

ABE = "abe"
SYM = "sym"


class DecryptionRefused(Exception):
    """Decryption stopped; ``stage`` is ``att_check``, ``integrity`` or ``block <i>``."""

    def __init__(self, stage: str, reason: str):
        super().__init__(f"{stage}: {reason}")
        self.stage = stage
        self.reason = reason


# -- pre-checks -----------------------------------------------------------------------


def att_check(
    source: MaskedPointTable | CiphertextBlock, attrs: Iterable[str], tree_length: int | None = None
) -> bytes:
    """Recover the final id share from the point table, or refuse.

    ``source`` is the table itself or the last block carrying it (whose id
    length then gives the serialized tree length).
    """
    if isinstance(source, CiphertextBlock):
        if source.table is None:
            raise DecryptionRefused("att_check", "block carries no point table")
        table, tree_length = source.table, len(source.id)
    else:
        table = source
    if tree_length is None:
        raise ValueError("tree_length is required with a bare table")
    points = lookup_points(table, attrs)
    try:
        limbs = shamir_recover(points, table.k)
        return join_limbs(limbs, tree_length)
    except InsufficientShares:
        raise DecryptionRefused(
            "att_check", f"attributes unlock {len(points)} of {table.k} required root branches"
        ) from None
    except ValueError:
        raise DecryptionRefused("att_check", "recovered share is malformed") from None


def ctb_integrity(ids: Iterable[bytes], last_share: bytes) -> AccessTree:
    """XOR the id shares back into the serialized tree and parse it, or refuse."""
    try:
        serialized = xor_recover(ids, last_share)
        return parse_serialized(serialized)
    except (TreeDecodeError, ValueError) as exc:
        raise DecryptionRefused("integrity", f"block ids do not rebuild a valid tree ({exc})") from None


# -- per-block primitives -------------------------------------------------------------


def decrypt_leaf(block: CiphertextBlock, key: AttributeKey, leaf_index: int, attribute: str) -> TargetElement | None:
    """e(g,g)^{r q_y(0)} for one leaf, or None when it cannot be computed."""
    comp = key.components.get(attribute)
    lc = block.leaf(leaf_index)
    if comp is None or lc is None:
        return None
    d_j, d_j_prime = comp
    try:
        return pair(d_j, lc.c_hat) / pair(lc.c_hat_prime, d_j_prime)
    except ValueError:
        return None


def decrypt_interior(child_values: Mapping[int, TargetElement | None], threshold: int) -> TargetElement | None:
    """Lagrange-combine the ``threshold`` lowest-index available children at 0."""
    available = sorted(i for i, v in child_values.items() if v is not None)
    if len(available) < threshold:
        return None
    chosen = available[:threshold]
    result = None
    for i in chosen:
        term = child_values[i] ** lagrange_coeff(i, chosen)
        result = term if result is None else result * term
    return result


def _split_plaintext(block: CiphertextBlock, plaintext: bytes | None) -> tuple[bytes, SourceElement]:
    stage = f"block {block.index}"
    if plaintext is None:
        raise DecryptionRefused(stage, "payload authentication failed")
    if len(plaintext) < E_BYTES:
        raise DecryptionRefused(stage, "payload too short")
    try:
        e_i = SourceElement.from_bytes(plaintext[-E_BYTES:])
    except DecodeError:
        raise DecryptionRefused(stage, "embedded blinding element is malformed") from None
    return plaintext[:-E_BYTES], e_i


def ctb_abe_dec(block: CiphertextBlock, key: AttributeKey, gate_value: TargetElement) -> tuple[bytes, SourceElement]:
    """Open a block from its gate value; returns (DB_i, E_i)."""
    try:
        mask = pair(block.c_prime, key.D) / gate_value
    except ValueError:
        raise DecryptionRefused(f"block {block.index}", "C' has no pairable image") from None
    return _split_plaintext(block, open_payload(mask, block.index, block.id, block.payload))


def ctb_sym_dec(block: CiphertextBlock, key: AttributeKey, parent_e: SourceElement) -> tuple[bytes, SourceElement]:
    """Open a block from its parent's blinding element; returns (DB_i, E_i)."""
    stage = f"block {block.index}"
    if block.delta_c is None:
        raise DecryptionRefused(stage, "block has no parent link")
    try:
        e = parent_e / block.delta_c
        mask = pair(block.c_prime, key.D) / pair(e, key.D_hat)
    except ValueError:
        raise DecryptionRefused(stage, "link elements have no pairable image") from None
    return _split_plaintext(block, open_payload(mask, block.index, block.id, block.payload))


# -- streaming session ----------------------------------------------------------------


@dataclass
class OpenEvent:
    """One block opened: which path, the group work it took, and wall time.

    ``needs_arrival`` lists the blocks whose leaf components were used (ABE
    path); ``needs_open`` is the parent whose blinding element was used (SYM).
    """

    index: int
    path: str
    ops: Counter = field(default_factory=Counter)
    seconds: float = 0.0
    needs_arrival: frozenset[int] = frozenset()
    needs_open: int | None = None


class DecryptionSession:
    """Incremental decryption of one stream.

    Construction runs the attribute pre-check and the integrity check on
    the manifest, so a refusal happens before any block is processed.
    """

    def __init__(self, pk: PublicParams, manifest: Manifest, key: AttributeKey):
        if manifest.pk_digest != pk.digest():
            raise DecryptionRefused("integrity", "stream was produced under different public parameters")
        self.pk = pk
        self.manifest = manifest
        self.key = key
        self.check_ops = Counter()
        last = att_check(manifest.table, key.attrs, manifest.tree_length)
        self.tree = ctb_integrity(manifest.ids, last)
        self.check_ops["xor_bytes"] += manifest.tree_length * (manifest.n + 1)
        self.subs: dict[int, SubTreePolicy] = {s.block_index: s for s in enumerate_blocks(self.tree)}
        if len(self.subs) != manifest.n:
            raise DecryptionRefused("integrity", "tree gate count does not match the block count")
        self._block_of_gate = {s.interior_node: s.block_index for s in self.subs.values()}
        self.blocks: dict[int, CiphertextBlock] = {}
        self.opened: dict[int, tuple[bytes, SourceElement]] = {}
        self.paths: dict[int, str] = {}
        self._leaf_values: dict[int, TargetElement | None] = {}
        self._gate_values: dict[int, TargetElement] = {}
        self._gate_sources: dict[int, frozenset[int]] = {}
        self._ops = Counter()
        self.assemble_ops = Counter()

    # readiness is structural plus "the blocks holding the needed leaves have arrived"
    def _ready(self, node_id: int) -> bool:
        node = self.tree.node(node_id)
        if node.is_leaf:
            if node.attribute not in self.key.components:
                return False
            return self._block_of_gate[node.parent] in self.blocks
        if node_id in self._gate_values:
            return True
        return sum(1 for c in node.children if self._ready(c)) >= node.threshold

    def _value(self, node_id: int, sources: set[int]) -> TargetElement | None:
        """Value of a ready node; ``sources`` collects the blocks whose leaves it used."""
        node = self.tree.node(node_id)
        if node.is_leaf:
            holder = self._block_of_gate[node.parent]
            sources.add(holder)
            if node_id not in self._leaf_values:
                self._ops["pairing"] += 2
                self._leaf_values[node_id] = decrypt_leaf(self.blocks[holder], self.key, node.index, node.attribute)
            return self._leaf_values[node_id]
        if node_id in self._gate_values:
            sources |= self._gate_sources[node_id]
            return self._gate_values[node_id]
        own: set[int] = set()
        ready = [c for c in node.children if self._ready(c)][: node.threshold]
        values = {self.tree.node(c).index: self._value(c, own) for c in ready}
        self._ops["gt_exp"] += len(values)
        value = decrypt_interior(values, node.threshold)
        if value is not None:
            self._gate_values[node_id] = value
            self._gate_sources[node_id] = frozenset(own)
        sources |= own
        return value

    def _open(self, index: int, path: str) -> OpenEvent:
        block = self.blocks[index]
        sub = self.subs[index]
        self._ops = Counter()
        sources: set[int] = set()
        parent = None
        started = time.perf_counter()
        if path == ABE:
            value = self._value(sub.interior_node, sources)
            if value is None:
                raise DecryptionRefused(f"block {index}", "a leaf component failed to decrypt")
            self._ops["pairing"] += 1
            opened = ctb_abe_dec(block, self.key, value)
        else:
            parent = sub.parent_block
            self._ops["pairing"] += 2
            opened = ctb_sym_dec(block, self.key, self.opened[parent][1])
        self._ops["sym_bytes"] += len(block.payload)
        self.opened[index] = opened
        self.paths[index] = path
        sources.add(index)
        return OpenEvent(index, path, self._ops, time.perf_counter() - started, frozenset(sources), parent)

    def feed(self, block: CiphertextBlock) -> list[OpenEvent]:
        """Accept one block; returns the blocks this made openable, in the order opened."""
        i = block.index
        if not 1 <= i <= self.manifest.n:
            raise DecryptionRefused("integrity", f"block index {i} outside 1..{self.manifest.n}")
        if block.id != self.manifest.ids[i - 1]:
            raise DecryptionRefused("integrity", f"block {i} id does not match the manifest")
        if i in self.blocks:
            raise DecryptionRefused("integrity", f"block {i} delivered twice")
        self.blocks[i] = block
        events = []
        progress = True
        while progress:
            progress = False
            for j in sorted(self.blocks):
                if j in self.opened:
                    continue
                sub = self.subs[j]
                if self._ready(sub.interior_node):
                    events.append(self._open(j, ABE))
                elif sub.parent_block in self.opened:
                    events.append(self._open(j, SYM))
                else:
                    continue
                progress = True
        return events

    def gate_value(self, index: int) -> TargetElement | None:
        """F_i for block ``index`` from the blocks received so far, or None if the key cannot reach it."""
        node = self.subs[index].interior_node
        if not self._ready(node):
            return None
        return self._value(node, set())

    def pending(self) -> list[int]:
        return [i for i in range(1, self.manifest.n + 1) if i not in self.opened]

    def finish(self) -> bytes:
        missing = [i for i in range(1, self.manifest.n + 1) if i not in self.blocks]
        if missing:
            raise DecryptionRefused("integrity", f"block {missing[0]} never arrived")
        locked = self.pending()
        if locked:
            raise DecryptionRefused(f"block {locked[0]}", "attributes do not reach this block")
        block_bytes = len(self.opened[1][0])
        self.assemble_ops = Counter(xor_bytes=block_bytes * (self.manifest.n - 1))
        try:
            plain = unchain(Block(i, db) for i, (db, _) in self.opened.items())
            return reassemble(plain)
        except ChunkError as exc:
            raise DecryptionRefused("integrity", f"decrypted blocks do not frame a message ({exc})") from None


def decrypt(
    pk: PublicParams, manifest: Manifest, blocks: Iterable[CiphertextBlock], key: AttributeKey
) -> bytes:
    session = DecryptionSession(pk, manifest, key)
    for block in blocks:
        session.feed(block)
    return session.finish()
