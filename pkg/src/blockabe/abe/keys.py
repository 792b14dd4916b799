"""System setup and attribute key generation."""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass
from typing import Iterable

from .. import tlv
from ..field import GROUP_FIELD
from ..pairing import (
    HASH_DST,
    SourceElement,
    TargetElement,
    generator,
    hash_to_group,
    pair,
    random_scalar,
)

GROUP_NAME = b"BLS12-381"
SUPPORTED_LEVELS = (128,)

PK_MAGIC = b"BKPK"
MK_MAGIC = b"BKMK"
SK_MAGIC = b"BKSK"


class KeyMismatch(ValueError):
    """Key material belongs to a different public parameter set."""


def default_rng():
    return secrets.SystemRandom()


@dataclass(frozen=True)
class PublicParams:
    g: SourceElement
    h: SourceElement  # g^beta
    egg_alpha: TargetElement  # e(g, g)^alpha
    dst: bytes = HASH_DST
    group: bytes = GROUP_NAME

    def H(self, attribute: str) -> SourceElement:
        return hash_to_group(attribute, self.dst)

    def to_bytes(self) -> bytes:
        return tlv.seal(
            PK_MAGIC,
            [
                (0x01, self.group),
                (0x02, self.dst),
                (0x03, self.g.to_bytes()),
                (0x04, self.h.to_bytes()),
                (0x05, self.egg_alpha.to_bytes()),
            ],
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> PublicParams:
        recs = tlv.open_envelope(data, PK_MAGIC, {1, 2, 3, 4, 5})
        group = tlv.single(recs, 0x01)
        if group != GROUP_NAME:
            raise tlv.FormatError(f"unsupported group {group!r}")
        pk = cls(
            g=SourceElement.from_bytes(tlv.single(recs, 0x03)),
            h=SourceElement.from_bytes(tlv.single(recs, 0x04)),
            egg_alpha=TargetElement.from_bytes(tlv.single(recs, 0x05)),
            dst=tlv.single(recs, 0x02),
            group=group,
        )
        if pk.g != generator() or not pk.h.is_consistent():
            raise tlv.FormatError("public parameters are not well formed")
        return pk

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()


@dataclass(frozen=True)
class MasterKey:
    beta: int
    g_alpha: SourceElement
    q: int
    pk_digest: bytes = b""

    def to_bytes(self) -> bytes:
        F = GROUP_FIELD
        return tlv.seal(
            MK_MAGIC,
            [
                (0x01, self.pk_digest),
                (0x02, F.to_bytes(self.beta)),
                (0x03, self.g_alpha.to_bytes()),
                (0x04, F.to_bytes(self.q)),
            ],
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> MasterKey:
        F = GROUP_FIELD
        recs = tlv.open_envelope(data, MK_MAGIC, {1, 2, 3, 4})
        return cls(
            beta=F.from_bytes(tlv.single(recs, 0x02)),
            g_alpha=SourceElement.from_bytes(tlv.single(recs, 0x03)),
            q=F.from_bytes(tlv.single(recs, 0x04)),
            pk_digest=tlv.single(recs, 0x01),
        )


@dataclass(frozen=True)
class AttributeKey:
    D: SourceElement  # g^((alpha + r) / beta)
    D_hat: SourceElement  # g^(r q)
    components: dict[str, tuple[SourceElement, SourceElement]]  # j -> (D_j, D'_j)
    pk_digest: bytes = b""

    @property
    def attrs(self) -> frozenset[str]:
        return frozenset(self.components)

    def restrict(self, attrs: Iterable[str]) -> AttributeKey:
        """Same key with only the components for ``attrs`` (a valid key for that subset)."""
        keep = set(attrs)
        return AttributeKey(
            self.D,
            self.D_hat,
            {a: c for a, c in self.components.items() if a in keep},
            self.pk_digest,
        )

    def to_bytes(self) -> bytes:
        recs = [(0x01, self.pk_digest), (0x03, self.D.to_bytes()), (0x04, self.D_hat.to_bytes())]
        for attr in sorted(self.components):
            d_j, d_j_prime = self.components[attr]
            recs += [(0x05, attr.encode()), (0x06, d_j.to_bytes()), (0x07, d_j_prime.to_bytes())]
        return tlv.seal(SK_MAGIC, recs)

    @classmethod
    def from_bytes(cls, data: bytes) -> AttributeKey:
        recs = tlv.open_envelope(data, SK_MAGIC, {1, 3, 4, 5, 6, 7})
        triples = [r for r in recs if r[0] in (5, 6, 7)]
        if len(triples) % 3:
            raise tlv.FormatError("incomplete attribute component")
        components = {}
        for n in range(0, len(triples), 3):
            tags = [t for t, _ in triples[n : n + 3]]
            if tags != [5, 6, 7]:
                raise tlv.FormatError("attribute components out of order")
            name = triples[n][1].decode("ascii")
            components[name] = (
                SourceElement.from_bytes(triples[n + 1][1]),
                SourceElement.from_bytes(triples[n + 2][1]),
            )
        return cls(
            D=SourceElement.from_bytes(tlv.single(recs, 0x03)),
            D_hat=SourceElement.from_bytes(tlv.single(recs, 0x04)),
            components=components,
            pk_digest=tlv.single(recs, 0x01),
        )


def setup(security_level: int = 128, rng=None) -> tuple[PublicParams, MasterKey]:
    if security_level not in SUPPORTED_LEVELS:
        raise ValueError(f"unsupported security level {security_level}")
    rng = rng or default_rng()
    alpha = random_scalar(rng)
    beta = random_scalar(rng, nonzero=True)
    q = random_scalar(rng, nonzero=True)
    g = generator()
    pk = PublicParams(g=g, h=g**beta, egg_alpha=pair(g, g) ** alpha)
    return pk, MasterKey(beta=beta, g_alpha=g**alpha, q=q, pk_digest=pk.digest())


def check_master_key(pk: PublicParams, mk: MasterKey) -> None:
    if mk.pk_digest != pk.digest():
        raise KeyMismatch("master key does not belong to these public parameters")


def keygen(pk: PublicParams, mk: MasterKey, attrs: Iterable[str], rng=None) -> AttributeKey:
    attrs = sorted(set(attrs))
    if not attrs:
        raise ValueError("an attribute key needs at least one attribute")
    check_master_key(pk, mk)
    rng = rng or default_rng()
    F = GROUP_FIELD
    g = pk.g
    r = random_scalar(rng)
    D = (mk.g_alpha * g**r) ** F.inv(mk.beta)
    D_hat = g ** F.mul(r, mk.q)
    g_r = g**r
    components = {}
    for j in attrs:
        r_j = random_scalar(rng)
        components[j] = (g_r * pk.H(j) ** r_j, g**r_j)
    return AttributeKey(D=D, D_hat=D_hat, components=components, pk_digest=pk.digest())
