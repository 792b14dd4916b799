"""Drive real encryption/decryption through the two-stage pipelines.

``clock="sim"`` charges every stage from the :class:`CostModel` (or from
injected :class:`StageTimes`) on a virtual clock, so traces are exactly
reproducible. ``clock="real"`` runs one thread per stage, measures wall
time and emulates the link with sleeps.
"""

from __future__ import annotations

import queue
import threading
import time
from collections import Counter
from typing import Callable, Iterable, Sequence

from ..abe.ciphertext import CiphertextBlock, Manifest
from ..abe.decrypt import DecryptionRefused, DecryptionSession
from ..abe.encrypt import manifest_for, plan_encryption, seal_blocks
from ..abe.keys import AttributeKey, MasterKey, PublicParams, check_master_key, default_rng
from ..baseline import decrypt_monolithic, encrypt_monolithic
from ..policy import AccessTree
from .model import DEFAULT_CHANNEL, ChannelModel, CostModel, StageTimes
from .schedule import PipelineTrace, StageRecord, simulate_two_stage

SIM = "sim"
REAL = "real"
CLOCKS = (SIM, REAL)


def _check_clock(clock: str, injected: StageTimes | None) -> None:
    if clock not in CLOCKS:
        raise ValueError(f"clock must be one of {CLOCKS}")
    if clock == REAL and injected is not None:
        raise ValueError("injected stage times need the simulated clock")


def _sender_trace(
    labels: Sequence[int],
    first: Sequence,
    second: Sequence,
    propagation,
    capacity: int | None,
) -> PipelineTrace:
    s1, s2 = simulate_two_stage(first, second, capacity)
    records: list[StageRecord] = []
    for label, (a0, a1), (b0, b1) in zip(labels, s1, s2):
        records.append(StageRecord(label, "encrypt", a0, a1))
        records.append(StageRecord(label, "transmit", b0, b1, deps=((label, "encrypt"),)))
        records.append(StageRecord(label, "deliver", b1, b1 + propagation, deps=((label, "transmit"),)))
    makespan = s2[-1][1] + propagation
    payload_starts = [b0 for label, (b0, _) in zip(labels, s2) if label >= 1]
    return PipelineTrace(
        records=records,
        makespan=makespan,
        sequential=sum(first) + sum(second) + propagation,
        fill=min(payload_starts),
        drain=makespan - s1[-1][1],
    )


def run_encrypt_transmit(
    message: bytes,
    tree: AccessTree,
    pk: PublicParams,
    mk: MasterKey,
    channel: ChannelModel = DEFAULT_CHANNEL,
    clock: str = SIM,
    *,
    cost_model: CostModel | None = None,
    injected: StageTimes | None = None,
    capacity: int | None = None,
    include_manifest: bool = True,
    rng=None,
) -> PipelineTrace:
    """Encrypt block by block while earlier blocks are on the wire.

    Injected times replace both the cost model and the channel: their
    transmit entries are full link occupations and no latency is added.
    """
    _check_clock(clock, injected)
    check_master_key(pk, mk)
    rng = rng or default_rng()
    if clock == REAL:
        return _real_encrypt_transmit(message, tree, pk, mk, channel, capacity, include_manifest, rng)
    costs = cost_model or CostModel()
    plan = plan_encryption(message, tree, rng)
    manifest = manifest_for(plan, pk)
    if injected is not None and injected.n != manifest.n:
        raise ValueError(f"injected times cover {injected.n} blocks, the tree has {manifest.n}")
    labels, first, second = [], [], []
    if include_manifest:
        labels.append(0)
        first.append(0 if injected else costs.ops_seconds(CostModel.plan_ops(manifest.n, manifest.tree_length, len(tree.root.children))))
        second.append(0 if injected else channel.serialization_time(len(manifest.to_bytes())))
    blocks = []
    for block in seal_blocks(pk, mk, plan, rng):
        i = block.index
        blocks.append(block)
        labels.append(i)
        if injected is not None:
            first.append(injected.encrypt[i - 1])
            second.append(injected.transmit[i - 1])
        else:
            chained = len(plan.plain_blocks[i - 1]) if i > 1 else 0
            first.append(costs.ops_seconds(CostModel.encrypt_ops(block, chained)))
            second.append(channel.serialization_time(len(block.to_bytes())))
    trace = _sender_trace(labels, first, second, 0 if injected else channel.latency, capacity)
    trace.manifest, trace.blocks = manifest, blocks
    return trace


def run_monolithic_encrypt_transmit(
    message: bytes,
    tree: AccessTree,
    pk: PublicParams,
    mk: MasterKey,
    channel: ChannelModel = DEFAULT_CHANNEL,
    clock: str = SIM,
    *,
    cost_model: CostModel | None = None,
    rng=None,
) -> PipelineTrace:
    """The single-ciphertext baseline under the same channel and cost model.

    With nothing to overlap, the real clock only changes how encryption is
    charged (measured wall time); the link is accounted arithmetically.
    """
    _check_clock(clock, None)
    costs = cost_model or CostModel()
    started = time.perf_counter()
    manifest, block = encrypt_monolithic(pk, mk, message, tree, rng or default_rng())
    if clock == REAL:
        first = [0.0, time.perf_counter() - started]
    else:
        first = [
            costs.ops_seconds(CostModel.plan_ops(1, manifest.tree_length, len(tree.root.children))),
            costs.ops_seconds(CostModel.monolithic_encrypt_ops(block)),
        ]
    second = [
        channel.serialization_time(len(manifest.to_bytes())),
        channel.serialization_time(len(block.to_bytes())),
    ]
    trace = _sender_trace([0, 1], first, second, channel.latency, None)
    trace.manifest, trace.blocks = manifest, [block]
    return trace


# -- receiver side ----------------------------------------------------------------------


class _Link:
    """Back-to-back transmissions on one link, starting at time zero."""

    def __init__(self, propagation):
        self.free = 0
        self.propagation = propagation
        self.records: list[StageRecord] = []
        self.arrival: dict[int, object] = {}

    def send(self, label: int, occupation) -> None:
        start, end = self.free, self.free + occupation
        self.free = end
        self.records.append(StageRecord(label, "transmit", start, end))
        self.records.append(StageRecord(label, "deliver", end, end + self.propagation, deps=((label, "transmit"),)))
        self.arrival[label] = end + self.propagation


def _truncate(link: _Link, receiver: list[StageRecord], at) -> list[StageRecord]:
    sent = [r for r in link.records if r.stage == "transmit" and (r.start < at or r.block == 0)]
    keep = {r.block for r in sent}
    return [r for r in link.records if r.block in keep] + receiver


def run_transmit_decrypt(
    pk: PublicParams,
    manifest: Manifest,
    blocks: Iterable[CiphertextBlock],
    key: AttributeKey,
    channel: ChannelModel = DEFAULT_CHANNEL,
    clock: str = SIM,
    *,
    cost_model: CostModel | None = None,
    injected: StageTimes | None = None,
    include_manifest: bool = True,
) -> PipelineTrace:
    """Decrypt each block as it arrives while later blocks are still on the wire.

    The manifest goes first; the attribute pre-check and integrity check run
    on it before any block is touched. Decryption records carry their
    dependencies (arrival of the blocks whose leaves were used, or the
    parent's decryption), so stalls are visible in the trace. A refusal ends
    the trace at the failing stage.
    """
    _check_clock(clock, injected)
    blocks = list(blocks)
    if clock == REAL:
        return _real_transmit_decrypt(pk, manifest, blocks, key, channel, include_manifest)
    costs = cost_model or CostModel()
    link = _Link(0 if injected else channel.latency)
    if include_manifest:
        link.send(0, 0 if injected else channel.serialization_time(len(manifest.to_bytes())))
    for block in blocks:
        occupation = injected.transmit[block.index - 1] if injected else channel.serialization_time(len(block.to_bytes()))
        link.send(block.index, occupation)
    last_arrival = max(link.arrival.values(), default=0)

    receiver: list[StageRecord] = []
    now = link.arrival.get(0, 0)
    check_deps = ((0, "deliver"),) if include_manifest else ()
    try:
        session = DecryptionSession(pk, manifest, key)
    except DecryptionRefused as exc:
        receiver.append(StageRecord(0, "check", now, now, check_deps, note=f"refused: {exc.stage}"))
        return PipelineTrace(_truncate(link, receiver, now), now, now, refused=exc.stage, manifest=manifest)
    check_time = 0 if injected else costs.ops_seconds(session.check_ops)
    receiver.append(StageRecord(0, "check", now, now + check_time, check_deps))
    now += check_time
    work = check_time
    first_start = None
    for block in blocks:
        now = max(now, link.arrival[block.index])
        try:
            events = session.feed(block)
        except DecryptionRefused as exc:
            receiver.append(StageRecord(block.index, "refused", now, now, note=exc.stage))
            return PipelineTrace(_truncate(link, receiver, now), now, now, refused=exc.stage, manifest=manifest)
        for ev in events:
            duration = injected.decrypt[ev.index - 1] if injected else costs.ops_seconds(ev.ops)
            deps = [(0, "check")] + [(b, "deliver") for b in sorted(ev.needs_arrival)]
            if ev.needs_open is not None:
                deps.append((ev.needs_open, "decrypt"))
            receiver.append(StageRecord(ev.index, "decrypt", now, now + duration, tuple(deps), note=ev.path))
            first_start = now if first_start is None else first_start
            now += duration
            work += duration
    try:
        plaintext = session.finish()
    except DecryptionRefused as exc:
        receiver.append(StageRecord(0, "refused", now, now, note=exc.stage))
        return PipelineTrace(_truncate(link, receiver, now), now, now, refused=exc.stage, manifest=manifest)
    assemble = 0 if injected else costs.ops_seconds(session.assemble_ops)
    receiver.append(
        StageRecord(0, "assemble", now, now + assemble, tuple((i, "decrypt") for i in sorted(session.opened)))
    )
    now += assemble
    work += assemble
    return PipelineTrace(
        records=link.records + receiver,
        makespan=now,
        sequential=last_arrival + work,
        fill=first_start if first_start is not None else now,
        drain=now - last_arrival,
        manifest=manifest,
        blocks=blocks,
        plaintext=plaintext,
    )


def run_monolithic_transmit_decrypt(
    pk: PublicParams,
    manifest: Manifest,
    block: CiphertextBlock,
    key: AttributeKey,
    channel: ChannelModel = DEFAULT_CHANNEL,
    clock: str = SIM,
    *,
    cost_model: CostModel | None = None,
) -> PipelineTrace:
    """Baseline receiver: pre-checks on the manifest, then one decryption after the block lands."""
    _check_clock(clock, None)
    costs = cost_model or CostModel()
    link = _Link(channel.latency)
    link.send(0, channel.serialization_time(len(manifest.to_bytes())))
    link.send(1, channel.serialization_time(len(block.to_bytes())))
    ops: Counter = Counter()
    started = time.perf_counter()
    plaintext = decrypt_monolithic(pk, manifest, block, key, ops)
    if clock == REAL:
        check_time, decrypt_time = 0.0, time.perf_counter() - started
    else:
        check_time = costs.ops_seconds(Counter(xor_bytes=2 * manifest.tree_length))
        decrypt_time = costs.ops_seconds(ops)
    check_end = link.arrival[0] + check_time
    start = max(check_end, link.arrival[1])
    receiver = [
        StageRecord(0, "check", link.arrival[0], check_end, ((0, "deliver"),)),
        StageRecord(1, "decrypt", start, start + decrypt_time, ((0, "check"), (1, "deliver"))),
    ]
    makespan = start + decrypt_time
    trace = PipelineTrace(
        records=link.records + receiver,
        makespan=makespan,
        sequential=link.arrival[1] + check_time + decrypt_time,
        fill=start,
        drain=makespan - link.arrival[1],
        manifest=manifest,
        blocks=[block],
        plaintext=plaintext,
    )
    return trace


# -- real clock ---------------------------------------------------------------------------


class _Recorder:
    def __init__(self):
        self.origin = time.perf_counter()
        self.records: list[StageRecord] = []
        self._lock = threading.Lock()

    def now(self) -> float:
        return time.perf_counter() - self.origin

    def add(self, record: StageRecord) -> None:
        with self._lock:
            self.records.append(record)


def _run_threads(*targets: Callable[[], None]) -> None:
    errors: list[BaseException] = []

    def guard(fn):
        def run():
            try:
                fn()
            except BaseException as exc:  # surfaced in the caller's thread
                errors.append(exc)

        return run

    threads = [threading.Thread(target=guard(t), daemon=True) for t in targets]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]


_DONE = object()


def _real_encrypt_transmit(message, tree, pk, mk, channel, capacity, include_manifest, rng) -> PipelineTrace:
    rec = _Recorder()
    buffer: queue.Queue = queue.Queue(maxsize=capacity or 0)
    out: dict = {"blocks": []}

    def sender():
        try:
            start = rec.now()
            plan = plan_encryption(message, tree, rng)
            out["manifest"] = manifest = manifest_for(plan, pk)
            if include_manifest:
                rec.add(StageRecord(0, "encrypt", start, rec.now()))
                buffer.put((0, manifest.to_bytes()))
            blocks = seal_blocks(pk, mk, plan, rng)
            while True:
                start = rec.now()
                block = next(blocks, None)
                if block is None:
                    break
                rec.add(StageRecord(block.index, "encrypt", start, rec.now()))
                out["blocks"].append(block)
                buffer.put((block.index, block.to_bytes()))
        finally:
            buffer.put(_DONE)

    def link():
        while (item := buffer.get()) is not _DONE:
            label, data = item
            start = rec.now()
            time.sleep(channel.serialization_time(len(data)))
            end = rec.now()
            deps = ((label, "encrypt"),)
            rec.add(StageRecord(label, "transmit", start, end, deps))
            rec.add(StageRecord(label, "deliver", end, end + channel.latency, ((label, "transmit"),)))

    _run_threads(sender, link)
    records = sorted(rec.records, key=lambda r: (r.start, r.block))
    busy = sum(r.end - r.start for r in records if r.stage in ("encrypt", "transmit"))
    makespan = max(r.end for r in records)
    enc_ends = [r.end for r in records if r.stage == "encrypt"]
    tx_starts = [r.start for r in records if r.stage == "transmit" and r.block >= 1]
    trace = PipelineTrace(
        records=records,
        makespan=makespan,
        sequential=busy + channel.latency,
        fill=min(tx_starts),
        drain=makespan - max(enc_ends),
        manifest=out["manifest"],
        blocks=out["blocks"],
    )
    return trace


def _real_transmit_decrypt(pk, manifest, blocks, key, channel, include_manifest) -> PipelineTrace:
    rec = _Recorder()
    inbox: queue.Queue = queue.Queue()
    state: dict = {"refused": None, "plaintext": None}
    stop = threading.Event()

    def link():
        items = ([(0, manifest, len(manifest.to_bytes()))] if include_manifest else []) + [
            (b.index, b, len(b.to_bytes())) for b in blocks
        ]
        for label, obj, size in items:
            if stop.is_set():
                break
            start = rec.now()
            time.sleep(channel.serialization_time(size))
            end = rec.now()
            rec.add(StageRecord(label, "transmit", start, end))
            rec.add(StageRecord(label, "deliver", end, end + channel.latency, ((label, "transmit"),)))
            inbox.put((end + channel.latency, label, obj))
        inbox.put(_DONE)

    def wait_until(moment: float) -> None:
        delay = moment - rec.now()
        if delay > 0:
            time.sleep(delay)

    def receiver():
        session = None
        if include_manifest:
            arrival, _, _ = inbox.get()
            wait_until(arrival)
        try:
            start = rec.now()
            session = DecryptionSession(pk, manifest, key)
            rec.add(StageRecord(0, "check", start, rec.now(), ((0, "deliver"),) if include_manifest else ()))
            while (item := inbox.get()) is not _DONE:
                arrival, label, block = item
                wait_until(arrival)
                cursor = rec.now()
                for ev in session.feed(block):
                    deps = [(0, "check")] + [(b, "deliver") for b in sorted(ev.needs_arrival)]
                    if ev.needs_open is not None:
                        deps.append((ev.needs_open, "decrypt"))
                    rec.add(StageRecord(ev.index, "decrypt", cursor, cursor + ev.seconds, tuple(deps), note=ev.path))
                    cursor += ev.seconds
            start = rec.now()
            state["plaintext"] = session.finish()
            rec.add(StageRecord(0, "assemble", start, rec.now()))
        except DecryptionRefused as exc:
            state["refused"] = exc.stage
            stop.set()
            moment = rec.now()
            rec.add(StageRecord(0, "refused", moment, moment, note=exc.stage))
            while inbox.get() is not _DONE:
                pass

    _run_threads(link, receiver)
    records = sorted(rec.records, key=lambda r: (r.start, r.block))
    makespan = max(r.end for r in records if r.stage != "deliver") if records else 0
    last_arrival = max((r.end for r in records if r.stage == "deliver"), default=0)
    work = sum(r.end - r.start for r in records if r.stage in ("check", "decrypt", "assemble"))
    dec_starts = [r.start for r in records if r.stage == "decrypt"]
    trace = PipelineTrace(
        records=records,
        makespan=makespan,
        sequential=last_arrival + work,
        fill=min(dec_starts) if dec_starts else makespan,
        drain=makespan - last_arrival,
        refused=state["refused"],
        manifest=manifest,
        blocks=blocks,
        plaintext=state["plaintext"],
    )
    return trace
