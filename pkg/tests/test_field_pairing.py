import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockabe.field import GROUP_FIELD, TINY_FIELD
from blockabe.pairing import (
    GROUP_ORDER,
    DecodeError,
    SourceElement,
    TargetElement,
    generator,
    hash_to_group,
    identity,
    pair,
    random_scalar,
    target_one,
)

RFC_DST = b"QUUX-V01-CS02-with-BLS12381G1_XMD:SHA-256_SSWU_RO_"

scalars = st.integers(min_value=0, max_value=GROUP_ORDER - 1)
nonzero = st.integers(min_value=1, max_value=GROUP_ORDER - 1)


def test_seeded_draws_repeat_and_differ():
    assert random_scalar(random.Random(42)) == random_scalar(random.Random(42))
    assert random_scalar(random.Random(42)) != random_scalar(random.Random(43))


def test_nonzero_draw_redraws_zero():
    class Zeros:
        calls = 0

        def randrange(self, *args):
            self.calls += 1
            return 0 if self.calls < 3 else 5

    assert random_scalar(Zeros(), nonzero=True) == 5


@given(nonzero)
def test_inverse(a):
    F = GROUP_FIELD
    assert F.inv(1) == 1
    assert F.mul(a, F.inv(a)) == 1
    assert F.add(a, F.neg(a)) == 0


def test_inverse_of_zero_is_an_error():
    with pytest.raises(ZeroDivisionError):
        GROUP_FIELD.inv(0)
    with pytest.raises(ZeroDivisionError):
        TINY_FIELD.inv(TINY_FIELD.p)


@given(st.integers(1, TINY_FIELD.p - 1), st.integers(0, TINY_FIELD.p - 1), st.integers(0, TINY_FIELD.p - 1))
def test_tiny_field_axioms(a, b, c):
    F = TINY_FIELD
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.div(F.mul(b, a), a) == b
    assert F.sub(b, c) == F.add(b, F.neg(c))


def test_scalar_encoding_is_fixed_width():
    F = GROUP_FIELD
    assert F.nbytes == 32 and F.limb_bytes == 31
    assert F.from_bytes(F.to_bytes(12345)) == 12345
    assert len(F.to_bytes(1)) == 32


def test_exponent_identities():
    g = generator()
    assert (g ** 0).is_identity()
    assert (g ** GROUP_ORDER).is_identity()
    assert g ** 0 == identity()


@settings(max_examples=10, deadline=None)
@given(scalars, scalars)
def test_exp_composes(a, b):
    g = generator()
    assert (g ** a) ** b == g ** GROUP_FIELD.mul(a, b)


@settings(max_examples=10, deadline=None)
@given(scalars, scalars)
def test_bilinear(a, b):
    g = generator()
    assert pair(g ** a, g ** b) == pair(g, g) ** GROUP_FIELD.mul(a, b)


def test_nondegenerate_and_symmetric():
    g = generator()
    assert not pair(g, g).is_one()
    assert pair(g, identity()).is_one()
    assert pair(g, identity()) == target_one()
    h = hash_to_group("x")
    assert pair(h, g ** 3) == pair(g ** 3, h)


def test_hashed_elements_pair_against_dual_elements_only():
    h = hash_to_group("a")
    assert h.g2 is None
    with pytest.raises(ValueError):
        pair(h, hash_to_group("b"))


def _affine(element: SourceElement) -> tuple[int, int]:
    _, x, y = str(element.g1).split()
    return int(x), int(y)


@pytest.mark.parametrize(
    "message, x, y",
    [
        (
            b"",
            "052926add2207b76ca4fa57a8734416c8dc95e24501772c814278700eed6d1e4e8cf62d9c09db0fac349612b759e79a1",
            "08ba738453bfed09cb546dbb0783dbb3a5f1f566ed67bb6be0e8c67e2e81a4cc68ee29813bb7994998f3eae0c9c6a265",
        ),
        (
            b"abc",
            "03567bc5ef9c690c2ab2ecdf6a96ef1c139cc0b2f284dca0a9a7943388a49a3aee664ba5379a7655d3c68900be2f6903",
            "0b9c15f3fe6e5cf4211f346271d7b01c8f3b28be689c8429c85b67af215533311f0b8dfaaa154fa6b88176c229f2885d",
        ),
    ],
)
def test_hash_to_curve_known_answers(message, x, y):
    assert _affine(hash_to_group(message, RFC_DST)) == (int(x, 16), int(y, 16))


def test_hash_is_deterministic_and_separates_labels():
    assert hash_to_group("temp_sensor") == hash_to_group("temp_sensor")
    assert hash_to_group("a") != hash_to_group("b")
    for label in ("a", "b", "", "temp_sensor"):
        assert not hash_to_group(label).is_identity()


def test_encodings_round_trip():
    g = generator()
    for element in (g, g ** 5, identity(), hash_to_group("k"), hash_to_group("k") * g ** 2):
        assert SourceElement.from_bytes(element.to_bytes()) == element
    gt = pair(g, g) ** 9
    assert TargetElement.from_bytes(gt.to_bytes()) == gt


def test_truncated_encoding_is_rejected():
    data = (generator() ** 11).to_bytes()
    for cut in (0, 1, 48, len(data) - 1):
        with pytest.raises(DecodeError):
            SourceElement.from_bytes(data[:cut])
    gt = pair(generator(), generator()).to_bytes()
    with pytest.raises(DecodeError):
        TargetElement.from_bytes(gt[:-1])


def test_mutated_encodings_never_crash():
    rng = random.Random(99)
    samples = [(generator() ** 77).to_bytes(), hash_to_group("m").to_bytes()]
    outcomes = {"rejected": 0, "other element": 0}
    for trial in range(1000):
        data = bytearray(samples[trial % 2])
        pos = rng.randrange(len(data))
        data[pos] ^= 1 << rng.randrange(8)
        try:
            decoded = SourceElement.from_bytes(bytes(data))
        except DecodeError:
            outcomes["rejected"] += 1
        else:
            assert decoded.to_bytes() == bytes(data)
            outcomes["other element"] += 1
    assert sum(outcomes.values()) == 1000
    assert outcomes["rejected"] > 0
