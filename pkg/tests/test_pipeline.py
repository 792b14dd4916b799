import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockabe.abe import keygen
from blockabe.pipeline import (
    MIB,
    ChannelModel,
    CostModel,
    ScheduleViolation,
    StageRecord,
    StageTimes,
    SweepConfig,
    analytic_totals,
    approximate_makespan,
    benchmark_sweep,
    check_records,
    rows_to_csv,
    run_encrypt_transmit,
    run_monolithic_encrypt_transmit,
    run_monolithic_transmit_decrypt,
    run_transmit_decrypt,
    simulate_two_stage,
    two_stage_makespan,
)
from blockabe.policy import parse_policy
from blockabe.workloads import layered_tree, ten_level_tree

times = st.lists(st.fractions(min_value=0, max_value=50, max_denominator=16), min_size=1, max_size=12)


def reference_makespan(first, second):
    """Completion-time recurrence for two machines in series."""
    done1 = done2 = 0
    for a, b in zip(first, second):
        done1 += a
        done2 = max(done1, done2) + b
    return done2


def brute_force_buffered(first, second, capacity):
    """Event-by-event replay of a bounded buffer, written independently of the library."""
    n = len(first)
    start2 = [None] * n
    end2 = [None] * n
    clock1 = 0
    released = []  # time job i left stage one
    for i in range(n):
        finish = clock1 + first[i]
        leave = finish
        if i >= capacity:
            # job i waits in stage one until job i-capacity has entered stage two
            leave = max(finish, start2[i - capacity])
        released.append(leave)
        clock1 = leave
        start2[i] = max(leave, end2[i - 1] if i else 0)
        end2[i] = start2[i] + second[i]
    return end2[-1]


def test_analytic_examples():
    one = analytic_totals(StageTimes([1], [2], [3]))
    assert one.pipelined_enc_tx == one.sequential_enc_tx == 3 and one.delta_enc_tx == 0
    slow_link = analytic_totals(StageTimes([1] * 4, [2] * 4))
    assert (slow_link.pipelined_enc_tx, slow_link.sequential_enc_tx, slow_link.delta_enc_tx) == (9, 12, 3)
    assert slow_link.approx_enc_tx == 9 and slow_link.regime_enc_tx == "second-stage-bound"
    slow_cpu = analytic_totals(StageTimes([2] * 4, [1] * 4))
    assert (slow_cpu.pipelined_enc_tx, slow_cpu.sequential_enc_tx) == (9, 12)
    assert slow_cpu.approx_enc_tx == 9 and slow_cpu.regime_enc_tx == "first-stage-bound"


@given(times, st.data())
def test_closed_form_matches_recurrence(first, data):
    second = data.draw(st.lists(st.fractions(min_value=0, max_value=50, max_denominator=16), min_size=len(first), max_size=len(first)))
    exact = two_stage_makespan(first, second)
    assert exact == reference_makespan(first, second)
    s1, s2 = simulate_two_stage(first, second)
    assert s2[-1][1] == exact
    assert exact <= sum(first) + sum(second)
    approx, _ = approximate_makespan(first, second)
    assert approx <= exact


@given(times, st.data(), st.integers(1, 4))
def test_bounded_buffer_matches_replay(first, data, capacity):
    second = data.draw(st.lists(st.fractions(min_value=0, max_value=50, max_denominator=16), min_size=len(first), max_size=len(first)))
    s1, s2 = simulate_two_stage(first, second, capacity)
    assert s2[-1][1] == brute_force_buffered(first, second, capacity)
    assert s2[-1][1] >= two_stage_makespan(first, second)


def test_bounded_buffer_can_be_slower():
    first, second = [1, 1, 1], [5, 1, 1]
    assert simulate_two_stage(first, second, capacity=1)[1][-1][1] == 8 == two_stage_makespan(first, second)
    first, second = [5, 3, 1, 2, 4], [5, 4, 1, 1, 4]
    assert simulate_two_stage(first, second, capacity=1)[1][-1][1] == 22 > two_stage_makespan(first, second) == 20


@settings(max_examples=200)
@given(st.integers(2, 16), st.data())
def test_overlap_always_gains(n, data):
    positive = st.fractions(min_value=Fraction(1, 16), max_value=20, max_denominator=16)
    first = data.draw(st.lists(positive, min_size=n, max_size=n))
    second = data.draw(st.lists(positive, min_size=n, max_size=n))
    totals = analytic_totals(StageTimes(first, second, second))
    assert totals.delta_enc_tx > 0 and totals.delta_tx_dec > 0


def test_check_records_catches_violations():
    ok = [StageRecord(1, "encrypt", 0, 1), StageRecord(1, "transmit", 1, 2, deps=((1, "encrypt"),))]
    check_records(ok)
    with pytest.raises(ScheduleViolation):
        check_records([StageRecord(1, "encrypt", 0, 2), StageRecord(1, "transmit", 1, 3, deps=((1, "encrypt"),))])
    with pytest.raises(ScheduleViolation):
        check_records([StageRecord(1, "encrypt", 0, 2), StageRecord(2, "encrypt", 1, 3)])
    with pytest.raises(ScheduleViolation):
        check_records([StageRecord(1, "transmit", 0, 1, deps=((1, "encrypt"),))])


def test_injected_sender_run_is_exact(params):
    pk, mk = params
    tree = layered_tree(4, 8)
    injected = StageTimes([Fraction(1)] * 4, [Fraction(2)] * 4)
    trace = run_encrypt_transmit(b"m" * 500, tree, pk, mk, injected=injected, rng=random.Random(1))
    trace.check()
    assert trace.makespan == 9 and trace.sequential == 12 and trace.gain == 3


def test_injected_receiver_run_is_exact(params):
    pk, mk = params
    tree = layered_tree(4, 8)
    full = keygen(pk, mk, tree.attributes())
    sender = run_encrypt_transmit(b"m" * 500, tree, pk, mk, rng=random.Random(2))
    for tx, dec in (([Fraction(2)] * 4, [Fraction(1)] * 4), ([Fraction(1)] * 4, [Fraction(3)] * 4)):
        injected = StageTimes(tx, tx, dec)
        trace = run_transmit_decrypt(pk, sender.manifest, sender.blocks, full, injected=injected)
        trace.check()
        assert trace.plaintext == b"m" * 500
        assert trace.makespan == two_stage_makespan(tx, dec) == analytic_totals(injected).pipelined_tx_dec


def test_sim_traces_are_reproducible(params):
    pk, mk = params
    tree = layered_tree(3, 9)
    dumps = {
        run_encrypt_transmit(b"r" * 10000, tree, pk, mk, rng=random.Random(5)).dump() for _ in range(2)
    }
    assert len(dumps) == 1


def test_free_link_reduces_to_encryption_time(params):
    pk, mk = params
    tree = layered_tree(3, 6)
    trace = run_encrypt_transmit(b"q" * 2000, tree, pk, mk, ChannelModel(float("inf")), rng=random.Random(3))
    encrypt_total = sum(r.end - r.start for r in trace.stage("encrypt"))
    assert trace.makespan == pytest.approx(encrypt_total, rel=1e-12)


def test_single_block_receiver_has_no_overlap(params):
    pk, mk = params
    tree = parse_policy("A and B")
    sender = run_encrypt_transmit(b"x" * 4000, tree, pk, mk, rng=random.Random(4))
    key = keygen(pk, mk, ["A", "B"])
    injected = StageTimes([Fraction(1)], [Fraction(5)], [Fraction(3)])
    trace = run_transmit_decrypt(pk, sender.manifest, sender.blocks, key, injected=injected)
    assert trace.makespan == 8 == trace.sequential


def test_sym_path_run_stalls_only_on_parents(params):
    pk, mk = params
    tree = layered_tree(5, 10)
    root_leaves = [tree.node(c).attribute for c in tree.root.children if tree.node(c).is_leaf]
    key = keygen(pk, mk, root_leaves)
    sender = run_encrypt_transmit(b"s" * 30000, tree, pk, mk, rng=random.Random(6))
    trace = run_transmit_decrypt(pk, sender.manifest, sender.blocks, key)
    trace.check()
    assert trace.plaintext == b"s" * 30000
    decrypts = {r.block: r for r in trace.stage("decrypt")}
    assert decrypts[1].note == "abe"
    for i in range(2, 6):
        assert decrypts[i].note == "sym"
        assert set(decrypts[i].deps) == {(0, "check"), (i, "deliver"), (i - 1, "decrypt")}


def test_refusal_truncates_trace(params):
    pk, mk = params
    tree = parse_policy("(A and B) or (C and D)")
    sender = run_encrypt_transmit(b"t" * 100, tree, pk, mk, rng=random.Random(7))
    filtered = run_transmit_decrypt(pk, sender.manifest, sender.blocks, keygen(pk, mk, ["Q"]))
    assert filtered.refused == "att_check" and not filtered.stage("decrypt")
    # blocks already on the wire stay in the trace; nothing starts after the refusal
    assert all(r.start < filtered.makespan for r in filtered.stage("transmit"))
    slow = ChannelModel(1000, 0.0)
    cut = run_transmit_decrypt(pk, sender.manifest, sender.blocks, keygen(pk, mk, ["Q"]), slow)
    assert [r.block for r in cut.stage("transmit")] == [0]
    locked = run_transmit_decrypt(pk, sender.manifest, sender.blocks, keygen(pk, mk, ["A", "C"]))
    assert locked.refused == "block 1" and locked.plaintext is None


def test_ten_level_tree_gains_from_overlap(params):
    pk, mk = params
    rng = random.Random(8)
    message = rng.randbytes(10 * MIB)
    trace = run_encrypt_transmit(message, ten_level_tree(), pk, mk, rng=rng)
    trace.check()
    assert trace.makespan <= trace.sequential
    key = keygen(pk, mk, ten_level_tree().attributes())
    receiver = run_transmit_decrypt(pk, trace.manifest, trace.blocks, key)
    receiver.check()
    assert receiver.plaintext == message
    assert receiver.makespan <= receiver.sequential


def test_monolithic_runs(params):
    pk, mk = params
    tree = layered_tree(3, 6)
    sender = run_monolithic_encrypt_transmit(b"w" * 5000, tree, pk, mk, rng=random.Random(9))
    sender.check()
    key = keygen(pk, mk, tree.attributes())
    receiver = run_monolithic_transmit_decrypt(pk, sender.manifest, sender.blocks[0], key)
    receiver.check()
    assert receiver.plaintext == b"w" * 5000


def test_real_clock_runs_respect_precedence(params):
    pk, mk = params
    tree = layered_tree(4, 8)
    channel = ChannelModel(50 * MIB, 0.001)
    sender = run_encrypt_transmit(b"v" * 200000, tree, pk, mk, channel, "real", rng=random.Random(10))
    check_records(sender.records, tolerance=1e-3)
    assert len(sender.blocks) == 4
    key = keygen(pk, mk, tree.attributes())
    receiver = run_transmit_decrypt(pk, sender.manifest, sender.blocks, key, channel, "real")
    check_records(receiver.records, tolerance=1e-3)
    assert receiver.plaintext == b"v" * 200000


def test_injected_times_need_sim_clock(params):
    pk, mk = params
    with pytest.raises(ValueError):
        run_encrypt_transmit(b"", layered_tree(1, 1), pk, mk, clock="real", injected=StageTimes([1], [1]))


def test_cost_model_calibration_is_positive():
    model = CostModel.calibrate(repeats=3, bulk_bytes=1 << 16)
    assert all(v > 0 for v in model.as_dict().values())


def test_sweep_is_deterministic_and_validated():
    config = SweepConfig("blocks", (1, 2), message_size=MIB // 4, leaves=4, seed=3)
    assert rows_to_csv(benchmark_sweep(config)) == rows_to_csv(benchmark_sweep(config))
    assert rows_to_csv(benchmark_sweep(config)).splitlines()[0] == (
        "dimension,value,scheme,total_seconds,fill_seconds,drain_seconds"
    )
    with pytest.raises(ValueError):
        SweepConfig("blocks", (8,), leaves=4)
    with pytest.raises(ValueError):
        SweepConfig("depth", (1,))
