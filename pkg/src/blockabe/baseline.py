"""Single-ciphertext CP-ABE over the whole tree, used as the comparison baseline.

Same key material, manifest, id shares and point table as the partitioned
scheme, but one block: every leaf component sits in it (keyed by leaf node
id), there is no chaining, no blinding element and no parent link.
"""

from __future__ import annotations

from collections import Counter

from .abe.ciphertext import CiphertextBlock, LeafCiphertext, Manifest, block_wire_size, open_payload, seal_payload
from .abe.decrypt import DecryptionRefused, att_check, ctb_integrity, decrypt_interior
from .abe.keys import AttributeKey, MasterKey, PublicParams, check_master_key, default_rng
from .chunker import Block, ChunkError, partition, reassemble
from .pairing import TargetElement, pair, random_scalar
from .policy import AccessTree, canonical_serialize, root_branch_partition
from .sharing import assign_shares, build_point_table, shamir_split, xor_share_ids


def encrypt_monolithic(
    pk: PublicParams, mk: MasterKey, message: bytes, tree: AccessTree, rng=None
) -> tuple[Manifest, CiphertextBlock]:
    check_master_key(pk, mk)
    rng = rng or default_rng()
    s = random_scalar(rng)
    shares = assign_shares(tree, s, rng)
    (framed,) = partition(message, 1)
    ids = xor_share_ids(canonical_serialize(tree).to_bytes(), 1, rng)
    root = tree.root
    points = shamir_split(ids.last, root.threshold, len(root.children), rng)
    table = build_point_table(root_branch_partition(tree), points, root.threshold)
    leaves = tuple(
        LeafCiphertext(leaf.id, pk.g ** shares[leaf.id], pk.H(leaf.attribute) ** shares[leaf.id])
        for leaf in tree.leaves()
    )
    block_id = ids.ids[0]
    payload = seal_payload(pk.egg_alpha**s, 1, block_id, framed.data)
    block = CiphertextBlock(block_id, 1, pk.h**s, None, leaves, payload, table)
    size = block_wire_size(len(block_id), len(leaves), len(payload), False, table)
    return Manifest(1, ids.ids, table, pk.digest(), (size,)), block


def _gate_value(tree: AccessTree, node_id: int, block: CiphertextBlock, key: AttributeKey, ops: Counter):
    node = tree.node(node_id)
    if node.is_leaf:
        comp = key.components.get(node.attribute)
        lc = block.leaf(node_id)
        if comp is None or lc is None:
            return None
        ops["pairing"] += 2
        try:
            return pair(comp[0], lc.c_hat) / pair(lc.c_hat_prime, comp[1])
        except ValueError:
            return None
    values: dict[int, TargetElement] = {}
    for child in node.children:
        value = _gate_value(tree, child, block, key, ops)
        if value is not None:
            values[tree.node(child).index] = value
            if len(values) == node.threshold:
                break
    ops["gt_exp"] += len(values)
    return decrypt_interior(values, node.threshold)


def decrypt_monolithic(
    pk: PublicParams,
    manifest: Manifest,
    block: CiphertextBlock,
    key: AttributeKey,
    ops: Counter | None = None,
) -> bytes:
    """Recover the message or raise :class:`DecryptionRefused`; ``ops`` collects group work."""
    ops = Counter() if ops is None else ops
    if manifest.pk_digest != pk.digest():
        raise DecryptionRefused("integrity", "stream was produced under different public parameters")
    tree = ctb_integrity(manifest.ids, att_check(manifest.table, key.attrs, manifest.tree_length))
    if manifest.n != 1 or block.index != 1 or block.id != manifest.ids[0]:
        raise DecryptionRefused("integrity", "block does not match the manifest")
    value = _gate_value(tree, tree.root_id, block, key, ops)
    if value is None:
        raise DecryptionRefused("block 1", "attributes do not satisfy the policy")
    ops["pairing"] += 1
    ops["sym_bytes"] += len(block.payload)
    try:
        mask = pair(block.c_prime, key.D) / value
    except ValueError:
        raise DecryptionRefused("block 1", "C' has no pairable image") from None
    framed = open_payload(mask, 1, block.id, block.payload)
    if framed is None:
        raise DecryptionRefused("block 1", "payload authentication failed")
    try:
        return reassemble([Block(1, framed)])
    except ChunkError as exc:
        raise DecryptionRefused("integrity", str(exc)) from None
