"""Parameter sweeps comparing the partitioned scheme with the single-ciphertext baseline."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from typing import Iterable, TextIO

from ..abe.encrypt import encrypt
from ..abe.keys import keygen, setup
from ..baseline import encrypt_monolithic
from ..pairing import hash_to_group
from ..workloads import layered_tree
from .model import DEFAULT_CHANNEL, MIB, ChannelModel, CostModel
from .runs import (
    CLOCKS,
    run_encrypt_transmit,
    run_monolithic_encrypt_transmit,
    run_monolithic_transmit_decrypt,
    run_transmit_decrypt,
)

DIMENSIONS = ("size", "leaves", "blocks")
PHASES = ("encrypt", "decrypt")
PARTITIONED = "partitioned"
MONOLITHIC = "monolithic"
CSV_HEADER = ("dimension", "value", "scheme", "total_seconds", "fill_seconds", "drain_seconds")


@dataclass(frozen=True)
class SweepConfig:
    """One swept dimension; the other two stay at their fixed values.

    ``phase="encrypt"`` times encryption overlapped with transmission;
    ``phase="decrypt"`` times transmission overlapped with decryption by a
    key holding exactly the root gate's attributes, the smallest key that
    satisfies these trees (lower blocks then open through their parents).
    """

    dimension: str
    values: tuple[int, ...]
    message_size: int = MIB
    leaves: int = 100
    blocks: int = 10
    channel: ChannelModel = DEFAULT_CHANNEL
    clock: str = "sim"
    phase: str = "encrypt"
    seed: int = 0
    cost_model: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"dimension must be one of {DIMENSIONS}")
        if self.phase not in PHASES:
            raise ValueError(f"phase must be one of {PHASES}")
        if self.clock not in CLOCKS:
            raise ValueError(f"clock must be one of {CLOCKS}")
        if not self.values:
            raise ValueError("nothing to sweep")
        for value in self.values:
            size, leaves, blocks = self.point(value)
            if size < 0 or blocks < 1 or leaves < blocks:
                raise ValueError(f"invalid sweep point {self.dimension}={value}: need leaves >= blocks >= 1")

    def point(self, value: int) -> tuple[int, int, int]:
        """(message bytes, leaves, blocks) at one sweep value; sizes are given in MiB."""
        return (
            value * MIB if self.dimension == "size" else self.message_size,
            value if self.dimension == "leaves" else self.leaves,
            value if self.dimension == "blocks" else self.blocks,
        )


@dataclass(frozen=True)
class BenchRow:
    dimension: str
    value: int
    scheme: str
    total_seconds: float
    fill_seconds: float
    drain_seconds: float


def benchmark_sweep(config: SweepConfig) -> list[BenchRow]:
    rows = []
    for value in config.values:
        size, leaves, blocks = config.point(value)
        rng = random.Random(f"{config.seed}/{config.dimension}/{value}")
        pk, mk = setup(rng=rng)
        tree = layered_tree(blocks, leaves)
        message = rng.randbytes(size)
        if config.phase == "encrypt":
            # measured runs should not inherit each other's attribute hashes
            hash_to_group.cache_clear()
            part = run_encrypt_transmit(
                message, tree, pk, mk, config.channel, config.clock, cost_model=config.cost_model, rng=rng
            )
            hash_to_group.cache_clear()
            mono = run_monolithic_encrypt_transmit(
                message, tree, pk, mk, config.channel, config.clock, cost_model=config.cost_model, rng=rng
            )
        else:
            root_leaves = [tree.node(c).attribute for c in tree.root.children if tree.node(c).is_leaf]
            key = keygen(pk, mk, root_leaves, rng)
            manifest, stream = encrypt(pk, mk, message, tree, rng)
            part = run_transmit_decrypt(
                pk, manifest, list(stream), key, config.channel, config.clock, cost_model=config.cost_model
            )
            mono_manifest, mono_block = encrypt_monolithic(pk, mk, message, tree, rng)
            mono = run_monolithic_transmit_decrypt(
                pk, mono_manifest, mono_block, key, config.channel, config.clock, cost_model=config.cost_model
            )
        for scheme, trace in ((PARTITIONED, part), (MONOLITHIC, mono)):
            rows.append(
                BenchRow(config.dimension, value, scheme, float(trace.makespan), float(trace.fill), float(trace.drain))
            )
    return rows


def write_csv(rows: Iterable[BenchRow], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [r.dimension, r.value, r.scheme, f"{r.total_seconds:.9f}", f"{r.fill_seconds:.9f}", f"{r.drain_seconds:.9f}"]
        )


def rows_to_csv(rows: Iterable[BenchRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def column(rows: Iterable[BenchRow], scheme: str) -> list[tuple[int, float]]:
    """(value, total) pairs for one scheme, in sweep order."""
    return [(r.value, r.total_seconds) for r in rows if r.scheme == scheme]
