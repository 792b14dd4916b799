import importlib
import random

import pytest

from blockabe.abe import (
    ABE,
    SYM,
    AttributeKey,
    DecryptionRefused,
    DecryptionSession,
    KeyMismatch,
    att_check,
    ctb_abe_dec,
    ctb_integrity,
    ctb_sym_dec,
    decrypt,
    decrypt_interior,
    decrypt_leaf,
    encrypt,
    encrypt_block,
    keygen,
    manifest_for,
    plan_encryption,
    setup,
)
from blockabe.abe.ciphertext import E_BYTES, open_payload
from blockabe.baseline import decrypt_monolithic, encrypt_monolithic
from blockabe.field import GROUP_FIELD as F
from blockabe.pairing import pair
from blockabe.policy import canonical_serialize, parse_policy

OR_OF_ANDS = "(A and B) or (C and D)"


def sealed(params, policy, message=b"attack at dawn", seed=1):
    pk, mk = params
    tree = parse_policy(policy)
    manifest, stream = encrypt(pk, mk, message, tree, random.Random(seed))
    return tree, manifest, list(stream)


def test_setup_relations(params):
    pk, mk = params
    g = pk.g
    assert pair(g, pk.h) == pair(g, g) ** mk.beta
    assert pk.egg_alpha == pair(mk.g_alpha, g)
    other, _ = setup(rng=random.Random(1))
    assert other.to_bytes() != pk.to_bytes()


def test_setup_rejects_other_levels():
    with pytest.raises(ValueError):
        setup(security_level=80)


def test_key_well_formed(params):
    pk, mk = params
    g = pk.g
    replay = random.Random(31)
    key = keygen(pk, mk, ["A", "B"], random.Random(31))
    r = F.random(replay)
    egg_r = pair(g, g) ** r
    assert pair(key.D, pk.h) == pk.egg_alpha * egg_r
    assert pair(key.D_hat, g) == pair(g, g) ** F.mul(r, mk.q)
    for name, (d_j, d_j_prime) in key.components.items():
        assert pair(d_j, g) / pair(pk.H(name), d_j_prime) == egg_r


def test_keys_are_fresh_and_nonempty(params):
    pk, mk = params
    one, two = keygen(pk, mk, ["A"]), keygen(pk, mk, ["A"])
    assert one.D != two.D and one.components["A"] != two.components["A"]
    with pytest.raises(ValueError):
        keygen(pk, mk, [])


def test_mismatched_master_key(params):
    pk, _ = params
    _, stranger = setup(rng=random.Random(5))
    with pytest.raises(KeyMismatch):
        keygen(pk, stranger, ["A"])
    with pytest.raises(KeyMismatch):
        encrypt(pk, stranger, b"x", parse_policy("A and B"))


def test_single_gate_structure(params):
    tree, manifest, blocks = sealed(params, "A and B")
    assert manifest.n == 1 and len(blocks) == 1
    (block,) = blocks
    assert block.delta_c is None
    assert block.table is not None and (block.table.k, block.table.t) == (2, 2)


def test_two_level_structure(params):
    _, manifest, blocks = sealed(params, OR_OF_ANDS)
    assert manifest.n == 3
    assert [b.delta_c is not None for b in blocks] == [False, True, True]
    assert [b.table is not None for b in blocks] == [False, False, True]
    assert (blocks[2].table.k, blocks[2].table.t) == (1, 2)
    assert [len(b.to_bytes()) for b in blocks] == list(manifest.block_sizes)


def test_linking_element_exponent_identity(params):
    pk, mk = params
    g = pk.g
    rng = random.Random(9)
    plan = plan_encryption(b"payload", parse_policy(OR_OF_ANDS), rng)
    s_parent = 123456789
    sub = plan.blocks[1]
    block, _ = encrypt_block(pk, mk, sub, plan.data_block(2), plan.shares, plan.ids.ids[1], s_parent, rng)
    share = plan.shares[sub.interior_node]
    lhs = pair(block.delta_c, g) ** mk.q * pair(g, g) ** share
    assert lhs == pair(g, g) ** s_parent


def test_payload_opens_with_gate_mask(params):
    pk, mk = params
    rng = random.Random(10)
    plan = plan_encryption(b"payload bytes", parse_policy("A and B"), rng)
    sub = plan.blocks[0]
    block, s_i = encrypt_block(pk, mk, sub, plan.data_block(1), plan.shares, plan.ids.ids[0], None, rng)
    mask = pk.egg_alpha ** plan.shares[sub.interior_node]
    opened = open_payload(mask, 1, block.id, block.payload)
    assert opened[:-E_BYTES] == plan.data_block(1)
    assert opened[-E_BYTES:] == (pk.g ** F.mul(s_i, F.inv(mk.q))).to_bytes()


def test_leaf_values_match_exponent_oracle(params):
    pk, mk = params
    g = pk.g
    rng = random.Random(12)
    tree = parse_policy("A and A and B")
    plan = plan_encryption(b"m", tree, rng)
    block, _ = encrypt_block(pk, mk, plan.blocks[0], plan.data_block(1), plan.shares, plan.ids.ids[0], None, rng)
    replay = random.Random(13)
    key = keygen(pk, mk, ["A"], random.Random(13))
    r = F.random(replay)
    for leaf in plan.blocks[0].leaf_children:
        value = decrypt_leaf(block, key, leaf.index, leaf.attribute)
        if leaf.attribute == "A":
            assert value == pair(g, g) ** F.mul(r, plan.shares[leaf.node_id])
        else:
            assert value is None


def test_gate_combination(params):
    pk, _ = params
    g = pk.g
    base = pair(g, g)
    poly = (17, 5)  # q(x) = 17 + 5x
    values = {i: base ** (17 + 5 * i) for i in (1, 2)}
    assert decrypt_interior(values, 2) == base ** 17
    assert decrypt_interior({2: base ** 4}, 1) == base ** 4
    assert decrypt_interior({1: values[1], 2: None}, 2) is None
    assert decrypt_interior({1: values[1]}, 2) is None


def test_wrong_mask_or_tampered_payload_fails_authentication(params):
    pk, mk = params
    key = keygen(pk, mk, ["A", "B", "C", "D"])
    _, manifest, blocks = sealed(params, OR_OF_ANDS)
    session = DecryptionSession(pk, manifest, key)
    for b in blocks:
        session.feed(b)
    root_e = session.opened[1][1]
    with pytest.raises(DecryptionRefused):
        ctb_sym_dec(blocks[2], key, session.opened[2][1])
    tampered = type(blocks[1])(**{**blocks[1].__dict__, "payload": blocks[1].payload[:-1] + b"\x00"})
    with pytest.raises(DecryptionRefused):
        ctb_sym_dec(tampered, key, root_e)


def test_gate_value_of_sibling_does_not_open_block(params):
    # under an AND root the two children hold different shares
    pk, mk = params
    key = keygen(pk, mk, ["A", "B", "C", "D"])
    _, manifest, blocks = sealed(params, "(A and B) and (C and D)")
    session = DecryptionSession(pk, manifest, key)
    for b in blocks:
        session.feed(b)
    sibling_value = session._gate_values[session.subs[2].interior_node]
    with pytest.raises(DecryptionRefused):
        ctb_abe_dec(blocks[2], key, sibling_value)
    own_value = session._gate_values[session.subs[3].interior_node]
    assert ctb_abe_dec(blocks[2], key, own_value) == session.opened[3]


def test_dual_paths_agree(params):
    pk, mk = params
    key = keygen(pk, mk, ["A", "B", "C", "D"])
    _, manifest, blocks = sealed(params, OR_OF_ANDS)
    session = DecryptionSession(pk, manifest, key)
    for b in blocks:
        session.feed(b)
    assert session.paths == {1: ABE, 2: ABE, 3: ABE}
    for i in (2, 3):
        assert ctb_sym_dec(blocks[i - 1], key, session.opened[1][1]) == session.opened[i]


def test_child_opens_through_parent_without_own_leaves(params):
    pk, mk = params
    tree = parse_policy("A or (B and C)")
    manifest, stream = encrypt(pk, mk, b"root only", tree, random.Random(2))
    key = keygen(pk, mk, ["A"])
    session = DecryptionSession(pk, manifest, key)
    for b in stream:
        session.feed(b)
    assert session.paths == {1: ABE, 2: SYM}
    assert session.finish() == b"root only"


def test_att_check_outcomes(params):
    _, manifest, _ = sealed(params, "2 of (A, B and C, D)")
    table, length = manifest.table, manifest.tree_length
    assert len(att_check(table, ["A", "D"], length)) == length
    assert len(att_check(table, ["A", "B"], length)) == length
    with pytest.raises(DecryptionRefused) as info:
        att_check(table, ["A"], length)
    assert info.value.stage == "att_check"
    with pytest.raises(DecryptionRefused):
        att_check(table, ["A", "bogus"], length)


def test_integrity_check(params):
    tree, manifest, _ = sealed(params, OR_OF_ANDS)
    last = att_check(manifest.table, ["A", "B"], manifest.tree_length)
    expected = canonical_serialize(tree).to_bytes()
    assert canonical_serialize(ctb_integrity(manifest.ids, last)).to_bytes() == expected
    assert canonical_serialize(ctb_integrity(reversed(manifest.ids), last)).to_bytes() == expected
    flipped = bytearray(manifest.ids[1])
    flipped[3] ^= 0x10
    with pytest.raises(DecryptionRefused) as info:
        ctb_integrity([manifest.ids[0], bytes(flipped), manifest.ids[2]], last)
    assert info.value.stage == "integrity"


@pytest.mark.parametrize(
    "held, stage",
    [({"A", "B"}, None), ({"C", "D"}, None), ({"A", "C"}, "block 1"), ({"B", "D"}, "block 1"), ({"E"}, "att_check")],
)
def test_decrypt_outcomes(params, held, stage):
    pk, mk = params
    _, manifest, blocks = sealed(params, OR_OF_ANDS, b"secret", seed=3)
    key = keygen(pk, mk, held)
    if stage is None:
        assert decrypt(pk, manifest, blocks, key) == b"secret"
    else:
        with pytest.raises(DecryptionRefused) as info:
            decrypt(pk, manifest, blocks, key)
        assert info.value.stage == stage


def test_refused_att_check_does_no_group_work(params, monkeypatch):
    pk, mk = params
    _, manifest, blocks = sealed(params, OR_OF_ANDS)
    key = keygen(pk, mk, ["Z"])
    dec = importlib.import_module("blockabe.abe.decrypt")

    def boom(*args):
        raise AssertionError("pairing attempted")

    monkeypatch.setattr(dec, "pair", boom)
    with pytest.raises(DecryptionRefused) as info:
        decrypt(pk, manifest, blocks, key)
    assert info.value.stage == "att_check"


def test_stream_under_other_parameters(params):
    pk, mk = params
    _, manifest, blocks = sealed(params, "A and B")
    other_pk, other_mk = setup(rng=random.Random(77))
    with pytest.raises(DecryptionRefused) as info:
        decrypt(other_pk, manifest, blocks, keygen(other_pk, other_mk, ["A", "B"]))
    assert info.value.stage == "integrity"


def test_restricted_key_behaves_like_smaller_key(params):
    pk, mk = params
    _, manifest, blocks = sealed(params, OR_OF_ANDS)
    full = keygen(pk, mk, ["A", "B", "C", "D"])
    assert decrypt(pk, manifest, blocks, full.restrict({"C", "D"})) == b"attack at dawn"
    with pytest.raises(DecryptionRefused):
        decrypt(pk, manifest, blocks, full.restrict({"A", "D"}))


def test_monolithic_baseline(params):
    pk, mk = params
    tree = parse_policy("(A and B) or (C and 2 of (D, E, F))")
    manifest, block = encrypt_monolithic(pk, mk, b"whole", tree, random.Random(4))
    assert manifest.n == 1 and block.delta_c is None
    assert decrypt_monolithic(pk, manifest, block, keygen(pk, mk, ["C", "E", "F"])) == b"whole"
    with pytest.raises(DecryptionRefused):
        decrypt_monolithic(pk, manifest, block, keygen(pk, mk, ["A", "C", "D"]))


def test_key_serialization(params):
    pk, mk = params
    key = keygen(pk, mk, ["A", "B"])
    assert AttributeKey.from_bytes(key.to_bytes()).to_bytes() == key.to_bytes()


def test_manifest_matches_plan(params):
    pk, _ = params
    plan = plan_encryption(b"x" * 1000, parse_policy(OR_OF_ANDS), random.Random(6))
    manifest = manifest_for(plan, pk)
    assert manifest.n == 3 and manifest.ids == plan.ids.ids
