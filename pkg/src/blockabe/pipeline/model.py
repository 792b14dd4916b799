"""Channel, per-block stage times and the per-operation cost model."""

from __future__ import annotations

import os
import random
import time
from collections import Counter
from dataclasses import dataclass, fields
from numbers import Real

from ..abe.ciphertext import E_BYTES, CiphertextBlock


@dataclass(frozen=True)
class ChannelModel:
    """A link with fixed bandwidth and propagation latency.

    The link is busy for ``(size + overhead) / bandwidth`` per block; latency
    only delays arrival and does not hold the link.
    """

    bandwidth: float  # bytes per second
    latency: float = 0.0  # seconds
    overhead: int = 0  # bytes added to every transfer

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.latency < 0 or self.overhead < 0:
            raise ValueError("latency and overhead must be non-negative")

    def serialization_time(self, size: int) -> float:
        return (size + self.overhead) / self.bandwidth

    def transfer_time(self, size: int) -> float:
        """Time from the first bit sent to the last bit received for one lone block."""
        return self.latency + self.serialization_time(size)


MIB = 1 << 20
DEFAULT_CHANNEL = ChannelModel(bandwidth=10 * MIB, latency=0.020)


@dataclass(frozen=True)
class StageTimes:
    """Per-block encryption, transmission and decryption times (index 0 is block 1)."""

    encrypt: tuple[Real, ...]
    transmit: tuple[Real, ...]
    decrypt: tuple[Real, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "encrypt", tuple(self.encrypt))
        object.__setattr__(self, "transmit", tuple(self.transmit))
        object.__setattr__(self, "decrypt", tuple(self.decrypt) or tuple(0 for _ in self.encrypt))
        n = len(self.encrypt)
        if n < 1:
            raise ValueError("need at least one block")
        if len(self.transmit) != n or len(self.decrypt) != n:
            raise ValueError("stage time sequences differ in length")
        if any(t < 0 for t in self.encrypt + self.transmit + self.decrypt):
            raise ValueError("stage times must be non-negative")

    @property
    def n(self) -> int:
        return len(self.encrypt)

    @property
    def total_encrypt(self):
        return sum(self.encrypt)

    @property
    def total_transmit(self):
        return sum(self.transmit)

    @property
    def total_decrypt(self):
        return sum(self.decrypt)


@dataclass(frozen=True)
class CostModel:
    """Seconds per group operation and bytes per second for bulk work.

    Defaults were measured on a desktop x86-64 core with mcl's BLS12-381;
    :meth:`calibrate` re-measures on the current machine. Simulated-clock
    runs charge these costs so their output is reproducible.
    """

    pairing: float = 1.40e-3
    gt_exp: float = 3.8e-4
    source_exp: float = 3.4e-4  # exponentiation of an element with both images
    g1_exp: float = 1.2e-4
    hash_to_group: float = 6.4e-4
    aead_bytes_per_second: float = 2.0e9
    xor_bytes_per_second: float = 9.0e8

    def ops_seconds(self, ops: Counter) -> float:
        return (
            ops["pairing"] * self.pairing
            + ops["gt_exp"] * self.gt_exp
            + ops["source_exp"] * self.source_exp
            + ops["g1_exp"] * self.g1_exp
            + ops["hash_to_group"] * self.hash_to_group
            + ops["sym_bytes"] / self.aead_bytes_per_second
            + ops["xor_bytes"] / self.xor_bytes_per_second
        )

    @staticmethod
    def encrypt_ops(block: CiphertextBlock, chained_bytes: int) -> Counter:
        """Group and bulk work that went into sealing ``block``."""
        leaves = len(block.leaves)
        return Counter(
            hash_to_group=leaves,
            g1_exp=leaves,
            # leaf C_hat, C', and the embedded E (plus delta_C below a parent)
            source_exp=leaves + 2 + (block.delta_c is not None),
            gt_exp=1,
            sym_bytes=len(block.payload),
            xor_bytes=chained_bytes,
        )

    @staticmethod
    def monolithic_encrypt_ops(block: CiphertextBlock) -> Counter:
        leaves = len(block.leaves)
        return Counter(
            hash_to_group=leaves,
            g1_exp=leaves,
            source_exp=leaves + 1,
            gt_exp=1,
            sym_bytes=len(block.payload),
        )

    @staticmethod
    def plan_ops(n: int, tree_length: int, root_children: int) -> Counter:
        # id shares are XORed together once; the table is a handful of hashes
        return Counter(xor_bytes=(n + 1) * tree_length + root_children * 64)

    @classmethod
    def calibrate(cls, repeats: int = 50, bulk_bytes: int = 4 * MIB) -> CostModel:
        from cryptography.hazmat.primitives.ciphers.aead import AESGCM

        from ..chunker import xor_bytes
        from ..pairing import generator, hash_to_group, pair, random_scalar

        rng = random.Random(0)
        g = generator()
        x = random_scalar(rng)
        h = hash_to_group("calibration")
        gt = pair(g, g)

        def per_call(fn) -> float:
            start = time.perf_counter()
            for _ in range(repeats):
                fn()
            return (time.perf_counter() - start) / repeats

        data = os.urandom(bulk_bytes)
        aead = AESGCM(bytes(32))
        fresh = iter(range(10**9))
        return cls(
            pairing=per_call(lambda: pair(g, g)),
            gt_exp=per_call(lambda: gt**x),
            source_exp=per_call(lambda: g**x),
            g1_exp=per_call(lambda: h**x),
            hash_to_group=per_call(lambda: hash_to_group.__wrapped__(f"cal{next(fresh)}")),
            aead_bytes_per_second=bulk_bytes / per_call(lambda: aead.encrypt(bytes(12), data, b"")),
            xor_bytes_per_second=bulk_bytes / per_call(lambda: xor_bytes(data, data)),
        )

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def payload_plain_bytes(block: CiphertextBlock) -> int:
    return len(block.payload) - E_BYTES - 16

