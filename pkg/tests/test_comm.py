"""Crossing-protocol transcripts: counts, bounds, transparency."""

import math

import pytest

from twoway.comm import (
    RegionSplit,
    comm_cost_report,
    message_bits,
    simulate_crossing_protocol,
    transcript_to_doc,
)
from twoway.compilers import build_eq_fingerprint_2pfa, build_grover_machine
from twoway.langs import encode_pair
from twoway.machines import (
    MachineSpec,
    Step,
    run_probabilistic_exact,
    run_qcfa_exact,
)


def ping_pong_machine(n: int, k: int) -> MachineSpec:
    """Deterministic machine bouncing between the tape halves k times.

    States ("go", i, d): currently on trip i moving in direction d. A trip
    ends when the head reaches the far marker; after k trips it accepts.
    """
    def transition(state, symbol):
        _, i, d = state
        if d == 1 and symbol == "$":
            if i == k:
                return Step("acc", 0)
            return Step(("go", i + 1, -1), -1)
        if d == -1 and symbol == "^":
            if i == k:
                return Step("acc", 0)
            return Step(("go", i + 1, 1), 1)
        return Step(("go", i, d), d)

    return MachineSpec(
        kind="deterministic", classical_state_count=2 * k + 2, quantum_dim=0,
        initial_classical=("go", 1, 1), transition=transition,
        accepting=frozenset(["acc"]), rejecting=frozenset(),
    )


def test_region_split_from_tape():
    split = RegionSplit.from_tape("^01##10$")
    assert split.alice_end == 2
    assert split.bob_start == 5
    assert split.block_width == 2


def test_fingerprint_single_crossing():
    cm = build_eq_fingerprint_2pfa(4)
    t = simulate_crossing_protocol(cm, "0110", "0110")
    assert t.crossings == 1
    assert len(t.messages) == 1
    assert t.messages[0].direction == "a->b"
    assert t.total_bits == message_bits(cm.machine)
    assert t.expected_crossings == pytest.approx(1.0)
    assert t.rounds == 1
    assert t.output.accept_prob == pytest.approx(1.0)


def test_fingerprint_bits_scale_logarithmically():
    for n in (4, 8, 16, 32, 64):
        cm = build_eq_fingerprint_2pfa(n)
        t = simulate_crossing_protocol(cm, "0" * n, "0" * n)
        assert t.crossings == 1
        ratio = t.total_bits / math.log2(n)
        assert 1.0 <= ratio <= 8.0


def test_ping_pong_crossing_count():
    # k trips across the tape produce exactly k messages
    for k in (1, 2, 5):
        m = ping_pong_machine(2, k)
        t = simulate_crossing_protocol(m, "00", "11")
        assert t.crossings == k
        assert [msg.direction for msg in t.messages] == [
            ("a->b" if i % 2 == 0 else "b->a") for i in range(k)]
        assert t.rounds == k


def test_transparency_probabilistic():
    cm = build_eq_fingerprint_2pfa(4)
    for x, y in [("0110", "0110"), ("0110", "1001")]:
        plain = run_probabilistic_exact(cm.machine, encode_pair(x, y))
        t = simulate_crossing_protocol(cm, x, y)
        assert t.output == plain


def test_transparency_quantum():
    cm = build_grover_machine(4)
    for x, y in [("1000", "1000"), ("1000", "0111"), ("0110", "0011")]:
        plain = run_qcfa_exact(cm.machine, encode_pair(x, y))
        t = simulate_crossing_protocol(cm, x, y)
        assert t.output == plain


def test_crossing_separation_at_least_block_width():
    cm = build_grover_machine(4)
    t = simulate_crossing_protocol(cm, "0101", "0110")
    steps = [msg.step_index for msg in t.messages]
    assert all(b - a >= t.block_width for a, b in zip(steps, steps[1:]))


def test_quantum_transcript_charges_qubits():
    cm = build_grover_machine(4)
    t = simulate_crossing_protocol(cm, "0000", "0000")
    dim = cm.machine.quantum_dim
    assert t.messages[0].qubits == math.ceil(math.log2(dim))
    assert t.total_qubits == t.crossings * math.ceil(math.log2(dim))
    # crossings are at least a block width apart, so steps/n bounds them
    assert t.crossings <= t.output.steps_max / 4 + 1


def test_cost_report_bounds():
    cm = build_eq_fingerprint_2pfa(8)
    t = simulate_crossing_protocol(cm, "00000000", "00001111")
    report = comm_cost_report(t, cm)
    assert report["crossing_bound_holds"]
    assert report["bits_bound_holds"]
    assert report["total_bits"] == t.total_bits


def test_cost_report_bound_formula():
    cm = build_grover_machine(4)
    t = simulate_crossing_protocol(cm, "1111", "0000")
    report = comm_cost_report(t, cm)
    assert report["crossing_bound"] == pytest.approx(t.output.steps_max / 4 + 1)
    assert report["crossings"] <= report["crossing_bound"]


def reject_in_x_machine() -> MachineSpec:
    """Rejects on the first x bit; the head never reaches the other region."""
    def transition(state, symbol):
        if symbol == "^":
            return Step("scan", 1)
        return Step("rej", 0)
    return MachineSpec(kind="deterministic", classical_state_count=2, quantum_dim=0,
                       initial_classical="scan", transition=transition,
                       accepting=frozenset(), rejecting=frozenset(["rej"]))


def test_zero_crossing_run():
    t = simulate_crossing_protocol(reject_in_x_machine(), "00", "11")
    assert t.crossings == 0
    assert t.total_bits == 0
    assert t.rounds == 0
    assert t.output.reject_prob == 1.0


def test_sample_mode_matches_exact_for_deterministic():
    m = ping_pong_machine(2, 3)
    exact = simulate_crossing_protocol(m, "01", "10", mode="exact")
    sampled = simulate_crossing_protocol(m, "01", "10", mode="sample", seed=9)
    assert sampled.crossings == exact.crossings
    assert [ms.direction for ms in sampled.messages] == [
        ms.direction for ms in exact.messages]


def test_transcript_doc():
    cm = build_eq_fingerprint_2pfa(4)
    t = simulate_crossing_protocol(cm, "0101", "0101")
    doc = transcript_to_doc(t)
    assert doc["crossings"] == 1
    assert doc["messages"][0]["direction"] == "a->b"
    assert doc["output"]["accept_prob"] == pytest.approx(1.0)
