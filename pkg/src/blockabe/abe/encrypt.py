"""Block-partitioned encryption: one ciphertext block per gate of the policy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from ..chunker import partition, xor_bytes
from ..field import GROUP_FIELD
from ..pairing import SourceElement, random_scalar
from ..policy import AccessTree, SubTreePolicy, canonical_serialize, enumerate_blocks, root_branch_partition
from ..sharing import (
    IdShareSet,
    MaskedPointTable,
    ShareAssignment,
    assign_shares,
    build_point_table,
    shamir_split,
    xor_share_ids,
)
from .ciphertext import (
    CiphertextBlock,
    LeafCiphertext,
    Manifest,
    block_wire_size,
    payload_length,
    seal_payload,
)
from .keys import MasterKey, PublicParams, check_master_key, default_rng


@dataclass(frozen=True)
class EncryptionPlan:
    """State fixed before the first block is sealed."""

    tree: AccessTree
    blocks: tuple[SubTreePolicy, ...]
    shares: ShareAssignment
    ids: IdShareSet
    table: MaskedPointTable
    plain_blocks: tuple[bytes, ...]  # M_1..M_n; chaining happens per block while sealing

    def data_block(self, index: int) -> bytes:
        """DB_1 = M_1, DB_i = M_{i-1} xor M_i."""
        if index == 1:
            return self.plain_blocks[0]
        return xor_bytes(self.plain_blocks[index - 2], self.plain_blocks[index - 1])


def plan_encryption(message: bytes, tree: AccessTree, rng) -> EncryptionPlan:
    subs = tuple(enumerate_blocks(tree))
    n = len(subs)
    s = random_scalar(rng)
    shares = assign_shares(tree, s, rng)
    plain_blocks = tuple(b.data for b in partition(message, n))
    serialized = canonical_serialize(tree).to_bytes()
    ids = xor_share_ids(serialized, n, rng)
    sets = root_branch_partition(tree)
    root = tree.root
    points = shamir_split(ids.last, root.threshold, len(root.children), rng)
    # Branches whose attributes all occur in lower branches contribute no entry.
    table = build_point_table(sets, points, root.threshold)
    return EncryptionPlan(tree, subs, shares, ids, table, plain_blocks)


def manifest_for(plan: EncryptionPlan, pk: PublicParams) -> Manifest:
    n = len(plan.blocks)
    sizes = tuple(
        block_wire_size(
            len(plan.ids.last),
            len(sub.leaf_children),
            payload_length(len(plan.plain_blocks[sub.block_index - 1])),
            sub.parent_block is not None,
            plan.table if sub.block_index == n else None,
        )
        for sub in plan.blocks
    )
    return Manifest(n, plan.ids.ids, plan.table, pk.digest(), sizes)


def encrypt_block(
    pk: PublicParams,
    mk: MasterKey,
    sub: SubTreePolicy,
    data_block: bytes,
    shares: ShareAssignment,
    block_id: bytes,
    s_parent: int | None,
    rng,
    table: MaskedPointTable | None = None,
) -> tuple[CiphertextBlock, int]:
    """Seal one block; returns it together with its fresh blinding exponent s_i."""
    F = GROUP_FIELD
    g = pk.g
    q_inv = F.inv(mk.q)
    share = shares[sub.interior_node]
    s_i = random_scalar(rng)
    e_i = g ** F.mul(s_i, q_inv)
    mask = pk.egg_alpha**share
    payload = seal_payload(mask, sub.block_index, block_id, data_block + e_i.to_bytes())
    leaves = tuple(
        LeafCiphertext(
            leaf.index,
            g ** shares[leaf.node_id],
            pk.H(leaf.attribute) ** shares[leaf.node_id],
        )
        for leaf in sub.leaf_children
    )
    delta_c: SourceElement | None = None
    if sub.parent_block is not None:
        if s_parent is None:
            raise ValueError("a non-root block needs its parent's blinding exponent")
        delta_c = g ** F.mul(F.sub(s_parent, share), q_inv)
    block = CiphertextBlock(
        id=block_id,
        index=sub.block_index,
        c_prime=pk.h**share,
        delta_c=delta_c,
        leaves=leaves,
        payload=payload,
        table=table,
    )
    return block, s_i


def seal_blocks(
    pk: PublicParams, mk: MasterKey, plan: EncryptionPlan, rng
) -> Iterator[CiphertextBlock]:
    n = len(plan.blocks)
    blinding: dict[int, int] = {}
    for sub in plan.blocks:
        i = sub.block_index
        block, blinding[i] = encrypt_block(
            pk,
            mk,
            sub,
            plan.data_block(i),
            plan.shares,
            plan.ids.ids[i - 1],
            blinding.get(sub.parent_block) if sub.parent_block else None,
            rng,
            plan.table if i == n else None,
        )
        yield block


def encrypt(
    pk: PublicParams, mk: MasterKey, message: bytes, tree: AccessTree, rng=None
) -> tuple[Manifest, Iterator[CiphertextBlock]]:
    """Returns the manifest at once and the blocks lazily, in index order."""
    check_master_key(pk, mk)
    rng = rng or default_rng()
    plan = plan_encryption(message, tree, rng)
    return manifest_for(plan, pk), seal_blocks(pk, mk, plan, rng)
