"""Two-stage pipeline schedules: closed-form makespans and a stepwise simulator.

Both work on any numeric type closed under ``+`` and ``max``; pass
:class:`fractions.Fraction` values to compare results exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import accumulate
from numbers import Real
from typing import Iterable, Sequence

from .model import StageTimes


def two_stage_makespan(first: Sequence[Real], second: Sequence[Real]) -> Real:
    """Makespan of jobs 1..n through two machines in fixed order.

    Some job k is the last one that the second machine starts exactly when
    the first machine hands it over, which gives
    ``max_k (first_1 + .. + first_k) + (second_k + .. + second_n)``.
    """
    if len(first) != len(second) or not first:
        raise ValueError("need equally long, non-empty stage time sequences")
    head = list(accumulate(first))
    tail = list(accumulate(reversed(second)))[::-1]
    return max(h + t for h, t in zip(head, tail))


def approximate_makespan(first: Sequence[Real], second: Sequence[Real]) -> tuple[Real, str]:
    """Fill-plus-bottleneck estimate and the regime it was chosen for.

    When the second stage is never faster, the pipeline costs the first job's
    first stage plus all second stages; in the opposite regime, all first
    stages plus the last job's second stage. Mixed inputs get the larger of
    the two, which is still a lower bound on the exact makespan.
    """
    second_bound = first[0] + sum(second)
    first_bound = sum(first) + second[-1]
    if all(b >= a for a, b in zip(first, second)):
        return second_bound, "second-stage-bound"
    if all(a >= b for a, b in zip(first, second)):
        return first_bound, "first-stage-bound"
    return max(first_bound, second_bound), "mixed"


@dataclass(frozen=True)
class AnalyticTotals:
    sequential_enc_tx: Real
    sequential_tx_dec: Real
    pipelined_enc_tx: Real
    pipelined_tx_dec: Real
    approx_enc_tx: Real
    approx_tx_dec: Real
    regime_enc_tx: str
    regime_tx_dec: str

    @property
    def delta_enc_tx(self) -> Real:
        return self.sequential_enc_tx - self.pipelined_enc_tx

    @property
    def delta_tx_dec(self) -> Real:
        return self.sequential_tx_dec - self.pipelined_tx_dec


def analytic_totals(times: StageTimes) -> AnalyticTotals:
    approx_enc, regime_enc = approximate_makespan(times.encrypt, times.transmit)
    approx_dec, regime_dec = approximate_makespan(times.transmit, times.decrypt)
    return AnalyticTotals(
        sequential_enc_tx=times.total_encrypt + times.total_transmit,
        sequential_tx_dec=times.total_transmit + times.total_decrypt,
        pipelined_enc_tx=two_stage_makespan(times.encrypt, times.transmit),
        pipelined_tx_dec=two_stage_makespan(times.transmit, times.decrypt),
        approx_enc_tx=approx_enc,
        approx_tx_dec=approx_dec,
        regime_enc_tx=regime_enc,
        regime_tx_dec=regime_dec,
    )


def simulate_two_stage(
    first: Sequence[Real], second: Sequence[Real], capacity: int | None = None
) -> tuple[list[tuple[Real, Real]], list[tuple[Real, Real]]]:
    """Step both workers through the jobs; returns (start, end) per job and stage.

    ``capacity`` bounds the buffer between the stages (None: unbounded). A
    first-stage worker that finishes into a full buffer holds the job and
    stays idle until a slot frees, i.e. until the job ``capacity`` places
    before it has started its second stage.
    """
    if len(first) != len(second):
        raise ValueError("stage time sequences differ in length")
    if capacity is not None and capacity < 1:
        raise ValueError("buffer capacity must be at least 1")
    s1: list[tuple[Real, Real]] = []
    s2: list[tuple[Real, Real]] = []
    worker1 = worker2 = 0
    for i, (a, b) in enumerate(zip(first, second)):
        start = worker1
        done = start + a
        handoff = done
        if capacity is not None and i >= capacity:
            handoff = max(done, s2[i - capacity][0])
        worker1 = handoff
        s1.append((start, done))
        begin = max(handoff, worker2)
        worker2 = begin + b
        s2.append((begin, worker2))
    return s1, s2


# -- traces -----------------------------------------------------------------------------

WORKER_OF = {
    "encrypt": "sender",
    "transmit": "link",
    "check": "receiver",
    "decrypt": "receiver",
    "assemble": "receiver",
}
ORDERED_STAGES = ("encrypt", "transmit", "deliver")


@dataclass(frozen=True)
class StageRecord:
    block: int  # 0 is the manifest
    stage: str
    start: Real
    end: Real
    deps: tuple[tuple[int, str], ...] = ()  # (block, stage) records that must end first
    note: str = ""


@dataclass
class PipelineTrace:
    records: list[StageRecord]
    makespan: Real  # pipelined total
    sequential: Real  # same work with no overlap
    fill: Real = 0  # until the second stage starts on the first payload block
    drain: Real = 0  # from the first stage's last block to the end of the run
    refused: str | None = None
    manifest: object = None
    blocks: list = field(default_factory=list)
    plaintext: bytes | None = None

    def stage(self, name: str) -> list[StageRecord]:
        return [r for r in self.records if r.stage == name]

    def find(self, block: int, stage: str) -> StageRecord | None:
        for r in self.records:
            if r.block == block and r.stage == stage:
                return r
        return None

    @property
    def gain(self) -> Real:
        return self.sequential - self.makespan

    def dump(self) -> str:
        lines = ["block,stage,start,end"]
        lines += [f"{r.block},{r.stage},{float(r.start):.9f},{float(r.end):.9f}" for r in self.records]
        return "\n".join(lines) + "\n"

    def check(self) -> None:
        """Raise :class:`ScheduleViolation` if any precedence or exclusivity constraint fails."""
        check_records(self.records)


class ScheduleViolation(AssertionError):
    pass


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ScheduleViolation(message)


def check_records(records: Iterable[StageRecord], tolerance: Real = 0) -> None:
    records = list(records)
    index = {(r.block, r.stage): r for r in records}
    for r in records:
        _require(r.end >= r.start, f"{r} ends before it starts")
        for dep in r.deps:
            other = index.get(dep)
            _require(other is not None, f"{r} depends on missing {dep}")
            _require(r.start + tolerance >= other.end, f"{r} starts before {other} ends")
    by_worker: dict[str, list[StageRecord]] = {}
    for r in records:
        worker = WORKER_OF.get(r.stage)
        if worker:
            by_worker.setdefault(worker, []).append(r)
    for worker, recs in by_worker.items():
        recs = sorted(recs, key=lambda r: (r.start, r.end))
        for a, b in zip(recs, recs[1:]):
            _require(b.start + tolerance >= a.end, f"{worker} runs {a} and {b} at once")
    for stage in ORDERED_STAGES:
        recs = sorted((r for r in records if r.stage == stage), key=lambda r: r.block)
        for a, b in zip(recs, recs[1:]):
            _require(b.start + tolerance >= a.start, f"{stage} of block {b.block} starts before block {a.block}")
