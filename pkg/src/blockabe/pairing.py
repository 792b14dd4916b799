"""Symmetric-looking bilinear group on top of BLS12-381.

The scheme is written for a symmetric pairing e: G0 x G0 -> G1. BLS12-381
is asymmetric, so a :class:`SourceElement` carries the image of the same
exponent in both source groups (``g1`` in G1 and ``g2`` in G2) whenever it
is derived from the generator. :func:`pair` uses whichever orientation the
operands make available, so ``pair(a, b) == pair(b, a)`` as in the
symmetric setting.

Hashed elements only exist in G1: a standard hash-to-curve cannot produce
a matching G2 image with the same unknown discrete log. Group products
keep only the images present in both factors, so anything touched by a
hashed element is G1-only. The scheme's algebra always pairs such values
against a generator-derived element, which has both images.

Curve arithmetic is delegated to mcl (``pymcl``); hashing to G1 uses
blst's RFC 9380 ``BLS12381G1_XMD:SHA-256_SSWU_RO_`` suite (``pyblst``).
"""

from __future__ import annotations

import functools

import pyblst
import pymcl

from .field import GROUP_FIELD

GROUP_ORDER = GROUP_FIELD.p
assert pymcl.r == GROUP_ORDER

HASH_DST = b"BLOCKABE-V01-CS01-with-BLS12381G1_XMD:SHA-256_SSWU_RO_"

G1_BYTES = 48
G2_BYTES = 96
GT_BYTES = 576

# BLS12-381 base field modulus; p % 4 == 3 so square roots are one pow()
_FP = int(
    "1a0111ea397fe69a4b1ba7b6434bacd764774b84f38512bf6730d2a0f6b0f624"
    "1eabfffeb153ffffb9feffffffffaaab",
    16,
)

_HAS_G1 = 0x01
_HAS_G2 = 0x02


class DecodeError(ValueError):
    """Raised for malformed, non-canonical or off-group encodings."""


def _fr(e: int) -> pymcl.Fr:
    return pymcl.Fr(str(e % GROUP_ORDER))


class SourceElement:
    """Element of the source group, written multiplicatively."""

    __slots__ = ("g1", "g2")

    def __init__(self, g1: pymcl.G1 | None = None, g2: pymcl.G2 | None = None):
        if g1 is None and g2 is None:
            raise ValueError("a source element needs at least one image")
        self.g1 = g1
        self.g2 = g2

    def __mul__(self, other: SourceElement) -> SourceElement:
        if not isinstance(other, SourceElement):
            return NotImplemented
        g1 = self.g1 + other.g1 if self.g1 is not None and other.g1 is not None else None
        g2 = self.g2 + other.g2 if self.g2 is not None and other.g2 is not None else None
        return SourceElement(g1, g2)

    def __truediv__(self, other: SourceElement) -> SourceElement:
        if not isinstance(other, SourceElement):
            return NotImplemented
        return self * other.inverse()

    def __pow__(self, e: int) -> SourceElement:
        k = _fr(e)
        return SourceElement(
            self.g1 * k if self.g1 is not None else None,
            self.g2 * k if self.g2 is not None else None,
        )

    def inverse(self) -> SourceElement:
        return SourceElement(
            -self.g1 if self.g1 is not None else None,
            -self.g2 if self.g2 is not None else None,
        )

    @property
    def flags(self) -> int:
        return (_HAS_G1 if self.g1 is not None else 0) | (_HAS_G2 if self.g2 is not None else 0)

    def is_identity(self) -> bool:
        return all(img.is_zero() for img in (self.g1, self.g2) if img is not None)

    def is_consistent(self) -> bool:
        """True unless both images exist and encode different exponents."""
        if self.g1 is None or self.g2 is None:
            return True
        return pymcl.pairing(self.g1, pymcl.g2) == pymcl.pairing(pymcl.g1, self.g2)

    def to_bytes(self) -> bytes:
        out = bytes([self.flags])
        if self.g1 is not None:
            out += self.g1.serialize()
        if self.g2 is not None:
            out += self.g2.serialize()
        return out

    @classmethod
    def from_bytes(cls, data: bytes) -> SourceElement:
        if not data:
            raise DecodeError("empty element encoding")
        flags = data[0]
        if flags not in (_HAS_G1, _HAS_G2, _HAS_G1 | _HAS_G2):
            raise DecodeError(f"unknown element flags 0x{flags:02x}")
        if len(data) != encoded_size(flags):
            raise DecodeError(f"element encoding has wrong length {len(data)}")
        g1 = g2 = None
        pos = 1
        try:
            if flags & _HAS_G1:
                g1 = pymcl.G1.deserialize(data[pos : pos + G1_BYTES])
                pos += G1_BYTES
            if flags & _HAS_G2:
                g2 = pymcl.G2.deserialize(data[pos : pos + G2_BYTES])
        except (ValueError, RuntimeError) as exc:
            raise DecodeError(f"not a group element: {exc}") from None
        element = cls(g1, g2)
        if element.to_bytes() != data:
            raise DecodeError("non-canonical element encoding")
        return element

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SourceElement):
            return NotImplemented
        return self.flags == other.flags and self.g1 == other.g1 and self.g2 == other.g2

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"SourceElement({self.to_bytes()[:9].hex()}...)"


def encoded_size(flags: int) -> int:
    return 1 + (G1_BYTES if flags & _HAS_G1 else 0) + (G2_BYTES if flags & _HAS_G2 else 0)


class TargetElement:
    """Element of the pairing target group, written multiplicatively."""

    __slots__ = ("value",)

    def __init__(self, value: pymcl.GT):
        self.value = value

    def __mul__(self, other: TargetElement) -> TargetElement:
        if not isinstance(other, TargetElement):
            return NotImplemented
        return TargetElement(self.value * other.value)

    def __truediv__(self, other: TargetElement) -> TargetElement:
        if not isinstance(other, TargetElement):
            return NotImplemented
        return TargetElement(self.value / other.value)

    def __pow__(self, e: int) -> TargetElement:
        return TargetElement(self.value ** _fr(e))

    def is_one(self) -> bool:
        return self.value.is_one()

    def to_bytes(self) -> bytes:
        return self.value.serialize()

    @classmethod
    def from_bytes(cls, data: bytes) -> TargetElement:
        if len(data) != GT_BYTES:
            raise DecodeError(f"target element encoding must be {GT_BYTES} bytes")
        try:
            value = pymcl.GT.deserialize(data)
        except (ValueError, RuntimeError) as exc:
            raise DecodeError(f"not a target group element: {exc}") from None
        element = cls(value)
        if element.to_bytes() != data:
            raise DecodeError("non-canonical target encoding")
        return element

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TargetElement):
            return NotImplemented
        return self.value == other.value

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"TargetElement({self.to_bytes()[:8].hex()}...)"


def generator() -> SourceElement:
    return SourceElement(pymcl.g1, pymcl.g2)


def identity() -> SourceElement:
    return SourceElement(pymcl.G1(), pymcl.G2())


def exp(base, e: int):
    """``base ** e`` for either a source or a target element."""
    return base ** e


def random_scalar(rng, nonzero: bool = False) -> int:
    return GROUP_FIELD.random(rng, nonzero=nonzero)


def pair(a: SourceElement, b: SourceElement) -> TargetElement:
    if a.g1 is not None and b.g2 is not None:
        return TargetElement(pymcl.pairing(a.g1, b.g2))
    if a.g2 is not None and b.g1 is not None:
        return TargetElement(pymcl.pairing(b.g1, a.g2))
    raise ValueError("operands have no G1/G2 image combination to pair")


def target_one() -> TargetElement:
    return pair(generator(), identity())


def _decompress_g1(data: bytes) -> pymcl.G1:
    """Decode a ZCash-format compressed G1 point (as emitted by blst)."""
    flags = data[0] >> 5
    if not flags & 0b100:
        raise DecodeError("expected a compressed point")
    if flags & 0b010:
        return pymcl.G1()
    x = int.from_bytes(bytes([data[0] & 0x1F]) + data[1:], "big")
    rhs = (pow(x, 3, _FP) + 4) % _FP
    y = pow(rhs, (_FP + 1) // 4, _FP)
    if y * y % _FP != rhs:
        raise DecodeError("x is not on the curve")
    if bool(flags & 0b001) != (y > (_FP - 1) // 2):
        y = _FP - y
    return pymcl.G1(f"1 {x} {y}")


@functools.lru_cache(maxsize=4096)
def hash_to_group(label: bytes | str, dst: bytes = HASH_DST) -> SourceElement:
    """Hash ``label`` to a G1-only source element (RFC 9380, random oracle)."""
    if isinstance(label, str):
        label = label.encode()
    point = pyblst.BlstP1Element.hash_to_group(label, dst)
    return SourceElement(_decompress_g1(bytes(point.compress())), None)
