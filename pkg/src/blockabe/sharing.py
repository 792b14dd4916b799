"""Secret sharing used by the scheme.

* top-down polynomial shares over an access tree (``assign_shares``),
* limb-wise Shamir (k, t) sharing of byte strings,
* the masked attribute -> point table used for the attribute pre-check,
* XOR (n+1, n+1) sharing of the serialized tree across block ids.

All field arithmetic takes a :class:`~blockabe.field.PrimeField`, defaulting
to the pairing group order; tests also run it over ``TINY_FIELD``.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .field import GROUP_FIELD, PrimeField
from .policy import AccessTree

TABLE_KEY_TAG = b"A-key"
TABLE_MASK_TAG = b"A-mask"
KEY_BYTES = 32
COORD_BYTES = 32


class InsufficientShares(ValueError):
    """Fewer distinct points than the threshold."""


def eval_poly(coeffs: Sequence[int], x: int, F: PrimeField = GROUP_FIELD) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % F.p
    return acc


def lagrange_coeff(i: int, S: Iterable[int], x: int = 0, F: PrimeField = GROUP_FIELD) -> int:
    """prod_{j in S, j != i} (x - j) / (i - j) over ``F``."""
    points = [j % F.p for j in S]
    if len(set(points)) != len(points):
        raise ValueError("interpolation points must be distinct")
    i %= F.p
    if i not in points:
        raise ValueError("i must be one of the interpolation points")
    num = den = 1
    for j in points:
        if j == i:
            continue
        num = num * (x - j) % F.p
        den = den * (i - j) % F.p
    return num * F.inv(den) % F.p


# -- tree shares ------------------------------------------------------------------


@dataclass(frozen=True)
class ShareAssignment:
    shares: dict[int, int]  # node id -> q_x(0)
    polynomials: dict[int, tuple[int, ...]]  # gate id -> coefficients, constant first

    def __getitem__(self, node_id: int) -> int:
        return self.shares[node_id]


def assign_shares(tree: AccessTree, s: int, rng, F: PrimeField = GROUP_FIELD) -> ShareAssignment:
    shares = {tree.root_id: s % F.p}
    polys: dict[int, tuple[int, ...]] = {}
    stack = [tree.root_id]
    while stack:
        nid = stack.pop()
        node = tree.node(nid)
        if node.is_leaf:
            continue
        coeffs = (shares[nid],) + tuple(F.random(rng) for _ in range(node.threshold - 1))
        polys[nid] = coeffs
        for child in node.children:
            shares[child] = eval_poly(coeffs, tree.node(child).index, F)
            stack.append(child)
    return ShareAssignment(shares, polys)


# -- Shamir over byte strings -----------------------------------------------------


@dataclass(frozen=True)
class ShamirPoint:
    x: int
    y: tuple[int, ...]  # one coordinate per limb


def split_limbs(secret: bytes, F: PrimeField = GROUP_FIELD) -> list[int]:
    w = F.limb_bytes
    return [int.from_bytes(secret[i : i + w], "big") for i in range(0, len(secret), w)] or [0]


def join_limbs(limbs: Sequence[int], length: int, F: PrimeField = GROUP_FIELD) -> bytes:
    """Inverse of :func:`split_limbs` for a secret of ``length`` bytes."""
    w = F.limb_bytes
    out = bytearray()
    for n, limb in enumerate(limbs):
        width = min(w, length - n * w)
        if width <= 0 and length:
            raise ValueError("more limbs than the secret length allows")
        width = max(width, 0)
        if limb >> (8 * width):
            raise ValueError("limb does not fit its byte width")
        out += limb.to_bytes(width, "big")
    if len(out) != length:
        raise ValueError("limbs do not cover the secret length")
    return bytes(out)


def shamir_split(secret: int | bytes, k: int, t: int, rng, F: PrimeField = GROUP_FIELD) -> list[ShamirPoint]:
    """Share ``secret`` among x = 1..t; any k points recover it.

    Byte strings are cut into limbs of ``F.limb_bytes`` bytes, each shared
    on its own polynomial with the same x-coordinates.
    """
    if not 1 <= k <= t:
        raise ValueError(f"need 1 <= k <= t, got k={k}, t={t}")
    if t >= F.p:
        raise ValueError("too many shares for the field")
    limbs = split_limbs(secret, F) if isinstance(secret, bytes) else [secret % F.p]
    polys = [[limb] + [F.random(rng) for _ in range(k - 1)] for limb in limbs]
    return [ShamirPoint(x, tuple(eval_poly(c, x, F) for c in polys)) for x in range(1, t + 1)]


def shamir_recover(points: Iterable[ShamirPoint], k: int, F: PrimeField = GROUP_FIELD) -> tuple[int, ...]:
    """Interpolate at 0 using the k lowest distinct x-coordinates."""
    by_x: dict[int, ShamirPoint] = {}
    for pt in points:
        if pt.x % F.p and pt.x not in by_x:
            by_x[pt.x] = pt
    if len(by_x) < k:
        raise InsufficientShares(f"{len(by_x)} distinct points, threshold {k}")
    chosen = [by_x[x] for x in sorted(by_x)[:k]]
    width = {len(pt.y) for pt in chosen}
    if len(width) != 1:
        raise ValueError("points carry different limb counts")
    xs = [pt.x for pt in chosen]
    weights = [lagrange_coeff(x, xs, 0, F) for x in xs]
    return tuple(
        sum(w * pt.y[n] for w, pt in zip(weights, chosen)) % F.p for n in range(width.pop())
    )


# -- masked point table -------------------------------------------------------------


def table_key(attribute: str) -> bytes:
    return hashlib.sha256(TABLE_KEY_TAG + b"\x00" + attribute.encode()).digest()


def table_mask(attribute: str, length: int) -> bytes:
    return hashlib.shake_256(TABLE_MASK_TAG + b"\x00" + attribute.encode()).digest(length)


def _xor(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def encode_point(pt: ShamirPoint) -> bytes:
    return b"".join(v.to_bytes(COORD_BYTES, "big") for v in (pt.x, *pt.y))


def decode_point(data: bytes, F: PrimeField = GROUP_FIELD) -> ShamirPoint | None:
    """Returns None for anything that cannot be a genuine point."""
    if len(data) < 2 * COORD_BYTES or len(data) % COORD_BYTES:
        return None
    vals = [int.from_bytes(data[i : i + COORD_BYTES], "big") for i in range(0, len(data), COORD_BYTES)]
    if vals[0] == 0 or any(v >= F.p for v in vals):
        return None
    return ShamirPoint(vals[0], tuple(vals[1:]))


@dataclass(frozen=True)
class MaskedPointTable:
    entries: dict[bytes, bytes] = field(default_factory=dict)
    k: int = 1
    t: int = 1

    def to_bytes(self) -> bytes:
        out = bytearray(struct.pack(">I", len(self.entries)))
        for key in sorted(self.entries):
            value = self.entries[key]
            out += key + struct.pack(">H", len(value)) + value
        out += struct.pack(">HH", self.k, self.t)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> MaskedPointTable:
        table, end = cls.read(data, 0)
        if end != len(data):
            raise ValueError("trailing bytes after point table")
        return table

    @classmethod
    def read(cls, data: bytes, pos: int) -> tuple[MaskedPointTable, int]:
        """Parse a table starting at ``pos``; returns it and the end offset."""
        try:
            (count,) = struct.unpack_from(">I", data, pos)
            pos += 4
            entries = {}
            prev = None
            for _ in range(count):
                key = data[pos : pos + KEY_BYTES]
                (vlen,) = struct.unpack_from(">H", data, pos + KEY_BYTES)
                pos += KEY_BYTES + 2
                value = data[pos : pos + vlen]
                if len(key) != KEY_BYTES or len(value) != vlen:
                    raise ValueError("truncated point table")
                if prev is not None and key <= prev:
                    raise ValueError("point table keys not strictly sorted")
                prev = key
                entries[key] = value
                pos += vlen
            k, t = struct.unpack_from(">HH", data, pos)
        except struct.error:
            raise ValueError("truncated point table") from None
        return cls(entries, k, t), pos + 4


def build_point_table(
    sets: Sequence[Iterable[str]], points: Sequence[ShamirPoint], k: int
) -> MaskedPointTable:
    if len(sets) != len(points):
        raise ValueError("one point per attribute set is required")
    entries: dict[bytes, bytes] = {}
    owner: dict[bytes, str] = {}
    for attr_set, pt in zip(sets, points):
        encoded = encode_point(pt)
        for attr in sorted(attr_set):
            key = table_key(attr)
            if key in owner:
                if owner[key] == attr:
                    raise ValueError(f"attribute {attr!r} appears in two sets")
                raise ValueError(f"table key collision between {owner[key]!r} and {attr!r}")
            owner[key] = attr
            entries[key] = _xor(table_mask(attr, len(encoded)), encoded)
    return MaskedPointTable(entries, k, len(points))


def lookup_points(
    table: MaskedPointTable, attrs: Iterable[str], F: PrimeField = GROUP_FIELD
) -> list[ShamirPoint]:
    found: dict[int, ShamirPoint] = {}
    for attr in sorted(set(attrs)):
        masked = table.entries.get(table_key(attr))
        if masked is None:
            continue
        pt = decode_point(_xor(table_mask(attr, len(masked)), masked), F)
        if pt is not None and pt.x not in found:
            found[pt.x] = pt
    return [found[x] for x in sorted(found)]


# -- XOR sharing of the serialized tree -------------------------------------------


@dataclass(frozen=True)
class IdShareSet:
    ids: tuple[bytes, ...]  # R_1..R_n
    last: bytes  # R_{n+1}


def xor_share_ids(secret: bytes, n: int, rng) -> IdShareSet:
    if n < 1:
        raise ValueError("need at least one block id")
    ids = tuple(rng.randbytes(len(secret)) for _ in range(n))
    return IdShareSet(ids, xor_recover(ids, secret))


def xor_recover(ids: Iterable[bytes], last: bytes) -> bytes:
    acc = int.from_bytes(last, "big")
    for r in ids:
        if len(r) != len(last):
            raise ValueError("id shares differ in length")
        acc ^= int.from_bytes(r, "big")
    return acc.to_bytes(len(last), "big")


def recombine_at_zero(values: Mapping[int, int], F: PrimeField = GROUP_FIELD) -> int:
    """Interpolate {index: share} at 0 (scalar analogue of interior-node decryption)."""
    xs = list(values)
    return sum(lagrange_coeff(x, xs, 0, F) * v for x, v in values.items()) % F.p
