"""Compiled-machine checks: lowering faithfulness, the AND gadget, fingerprints."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from twoway.compilers import (
    and_gadget_walk,
    bad_prime_ratio,
    build_eq_fingerprint_2pfa,
    build_form_checker,
    build_grover_machine,
    build_parity2_and_machine,
    build_parity2_machine,
    compile_and_oracle_program,
    compile_query_program,
    predicted_step_bound,
)
from twoway.langs import bracket, encode_pair
from twoway.machines import run_deterministic, run_probabilistic_exact, run_qcfa_exact
from twoway.querymodel import (
    FinalMeasure,
    QueryBlock,
    QueryProgram,
    grover_program,
    oracle_matrix,
    parity2_program,
    run_query_program,
    space_dim,
)
from twoway.serialization import machine_from_doc, machine_to_doc, materialize_table


def trial_division_primes(limit: int) -> list[int]:
    """Independent prime enumeration (the builder uses a library sieve)."""
    out = []
    for cand in range(2, limit + 1):
        if all(cand % p for p in range(2, int(math.isqrt(cand)) + 1)):
            out.append(cand)
    return out


def bitstring(n, value):
    return format(value, f"0{n}b")


def random_straight_line(rng, n, m, t) -> QueryProgram:
    dim = space_dim(n, m)
    us = []
    for _ in range(t + 1):
        z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        q, r = np.linalg.qr(z)
        us.append(q * (np.diag(r) / np.abs(np.diag(r))))
    start = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    start = start / np.linalg.norm(start)
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, _ = np.linalg.qr(z)
    rank = int(rng.integers(0, dim + 1))
    proj = q[:, :rank] @ q[:, :rank].conj().T
    return QueryProgram(n=n, m=m, start=start,
                        blocks=(QueryBlock(tuple(us), FinalMeasure(proj)),))


# ---------------------------------------------------------------- query lowering

def test_t0_full_projector_accepts_everything():
    n, m = 3, 1
    dim = space_dim(n, m)
    start = np.zeros(dim, dtype=complex)
    start[0] = 1.0
    p = QueryProgram(n=n, m=m, start=start,
                     blocks=(QueryBlock((np.eye(dim, dtype=complex),),
                                        FinalMeasure(np.eye(dim, dtype=complex))),))
    cm = compile_query_program(p)
    for v in range(2 ** n):
        res = run_qcfa_exact(cm.machine, bracket(bitstring(n, v)))
        assert res.accept_prob == pytest.approx(1.0, abs=1e-12)


def test_parity2_compiled_matches_exactly():
    cm = build_parity2_machine()
    p = parity2_program()
    for v in range(4):
        x = bitstring(2, v)
        machine = run_qcfa_exact(cm.machine, bracket(x))
        query = run_query_program(p, x)
        assert abs(machine.accept_prob - query.accept_prob) <= 1e-12
        assert machine.accept_prob == pytest.approx(int(v in (1, 2)), abs=1e-9)


def test_random_programs_compile_faithfully():
    rng = np.random.default_rng(2024)
    for _ in range(8):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 4))
        t = int(rng.integers(0, 5))
        p = random_straight_line(rng, n, m, t)
        cm = compile_query_program(p)
        for v in range(2 ** n):
            x = bitstring(n, v)
            machine = run_qcfa_exact(cm.machine, bracket(x))
            query = run_query_program(p, x)
            assert abs(machine.accept_prob - query.accept_prob) <= 1e-9


def test_compiled_rejects_malformed_tape():
    cm = build_parity2_machine()
    res = run_qcfa_exact(cm.machine, "^0#1$")
    assert res.accept_prob == 0.0 and res.reject_prob == 1.0


def test_grover_compiled_agrees_with_query_level():
    p = grover_program(4)
    cm = compile_query_program(p)
    for v in range(16):
        x = bitstring(4, v)
        machine = run_qcfa_exact(cm.machine, bracket(x))
        query = run_query_program(p, x)
        assert abs(machine.accept_prob - query.accept_prob) <= 1e-9


# ---------------------------------------------------------------- the AND gadget

def test_gadget_zero_inputs_is_identity():
    for n in (2, 3):
        state = np.full(n + 1, 1.0 / math.sqrt(n + 1), dtype=complex)
        out, leak = and_gadget_walk("0" * n, "0" * n, state)
        assert np.array_equal(out, state)
        assert leak == 0.0


def test_gadget_matches_direct_oracle_n3_exhaustive():
    rng = np.random.default_rng(9)
    state = rng.normal(size=4) + 1j * rng.normal(size=4)
    state /= np.linalg.norm(state)
    for xv in range(8):
        for yv in range(8):
            x, y = bitstring(3, xv), bitstring(3, yv)
            z = bitstring(3, xv & yv)
            out, leak = and_gadget_walk(x, y, state)
            direct = oracle_matrix(z).apply_raw(state)
            assert np.max(np.abs(out - direct)) <= 1e-9
            assert leak == 0.0  # aux qubit disentangles exactly


def test_gadget_all_sizes_and_random_states():
    rng = np.random.default_rng(31)
    for n in (1, 2, 3, 4):
        for _ in range(3):
            state = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
            state /= np.linalg.norm(state)
            xv = int(rng.integers(0, 2 ** n))
            yv = int(rng.integers(0, 2 ** n))
            out, leak = and_gadget_walk(bitstring(n, xv), bitstring(n, yv), state)
            direct = oracle_matrix(bitstring(n, xv & yv)).apply_raw(state)
            assert np.max(np.abs(out - direct)) <= 1e-9
            assert leak == 0.0


def test_parity2_and_pipeline_is_exact():
    cm = build_parity2_and_machine()
    for v in range(4):
        x = bitstring(2, v)
        res = run_qcfa_exact(cm.machine, encode_pair(x, "11"))
        expected = (v >> 1) ^ (v & 1)
        assert abs(res.accept_prob - expected) <= 1e-9


def test_grover_and_compiled_examples():
    cm = build_grover_machine(4)
    hit = run_qcfa_exact(cm.machine, encode_pair("1000", "1000"))
    assert hit.accept_prob >= 2.0 / 3.0
    miss = run_qcfa_exact(cm.machine, encode_pair("1000", "0111"))
    assert miss.accept_prob == 0.0


def test_grover_and_matches_query_on_conjunction():
    p = grover_program(4)
    cm = compile_and_oracle_program(p)
    rng = np.random.default_rng(77)
    for _ in range(12):
        xv = int(rng.integers(0, 16))
        yv = int(rng.integers(0, 16))
        x, y = bitstring(4, xv), bitstring(4, yv)
        machine = run_qcfa_exact(cm.machine, encode_pair(x, y))
        query = run_query_program(p, bitstring(4, xv & yv))
        assert abs(machine.accept_prob - query.accept_prob) <= 1e-9


# ---------------------------------------------------------------- fingerprint

def test_fingerprint_members_accept_with_certainty():
    for n in (2, 4, 6):
        cm = build_eq_fingerprint_2pfa(n, exact_arithmetic=True)
        rng = np.random.default_rng(n)
        for _ in range(5):
            x = bitstring(n, int(rng.integers(0, 2 ** n)))
            res = run_probabilistic_exact(cm.machine, encode_pair(x, x))
            assert res.accept_prob == 1


def test_fingerprint_n2_hand_case():
    cm = build_eq_fingerprint_2pfa(2)
    res = run_probabilistic_exact(cm.machine, encode_pair("01", "11"))
    # primes <= 4 are {2, 3}; values 1 and 3 collide only mod 2
    assert res.accept_prob == pytest.approx(0.5)


def test_fingerprint_equals_bad_prime_ratio_exactly():
    cm = build_eq_fingerprint_2pfa(4, exact_arithmetic=True)
    for xv, yv in [(3, 11), (0, 15), (7, 8), (1, 2)]:
        x, y = bitstring(4, xv), bitstring(4, yv)
        res = run_probabilistic_exact(cm.machine, encode_pair(x, y))
        assert res.accept_prob == bad_prime_ratio(x, y)


def test_fingerprint_oracle_uses_independent_primes():
    # ratio denominator must match a from-scratch prime enumeration
    for n in (4, 8):
        primes = trial_division_primes(n * n)
        assert float(bad_prime_ratio("0" * n, "0" * (n - 1) + "1")) == pytest.approx(
            sum(1 for p in primes if 1 % p == 0) / len(primes))
        diff = 12
        x, y = bitstring(n, 12), bitstring(n, 0)
        expected = Fraction(sum(1 for p in primes if diff % p == 0), len(primes))
        assert bad_prime_ratio(x, y) == expected


def test_fingerprint_worst_error_bounds():
    # worst over all nonequal pairs = worst over nonzero differences
    for n in (4, 8):
        primes = trial_division_primes(n * n)
        worst = max(
            Fraction(sum(1 for p in primes if d % p == 0), len(primes))
            for d in range(1, 2 ** n))
        assert worst <= Fraction(n - 1, len(primes))
        if n >= 8:
            assert float(worst) <= 2.0 * math.log(n) / n


def test_fingerprint_open_interval_prime_range():
    cm = build_eq_fingerprint_2pfa(2, prime_range="open-interval")
    # only p = 3 lies strictly between 2 and 4
    res = run_probabilistic_exact(cm.machine, encode_pair("01", "11"))
    assert res.accept_prob == pytest.approx(0.0)
    res = run_probabilistic_exact(cm.machine, encode_pair("01", "01"))
    assert res.accept_prob == pytest.approx(1.0)


def test_fingerprint_single_sweep_time():
    for n in (2, 4, 8):
        cm = build_eq_fingerprint_2pfa(n)
        res = run_probabilistic_exact(cm.machine, encode_pair("0" * n, "0" * n))
        assert res.steps_max == 3 * n + 2 == cm.predicted_steps
        assert res.steps_max <= 4 * n


def test_fingerprint_rejects_malformed_quickly():
    cm = build_eq_fingerprint_2pfa(2)
    for interior in ("01#01", "01###01", "0101", "01##0", "01##011"):
        res = run_probabilistic_exact(cm.machine, bracket(interior))
        assert res.accept_prob == 0.0
        assert res.steps_max <= 3 * 2 + 2


# ---------------------------------------------------------------- form checker

def test_form_checker_pair():
    m = build_form_checker(2)
    assert run_deterministic(m, "^01##01$").accept_prob == 1.0
    assert run_deterministic(m, "^01#01$").accept_prob == 0.0
    assert run_deterministic(m, "^01##0$").accept_prob == 0.0


def test_form_checker_plain():
    m = build_form_checker(4, "plain")
    assert run_deterministic(m, "^0110$").accept_prob == 1.0
    assert run_deterministic(m, "^011$").accept_prob == 0.0
    assert run_deterministic(m, "^01101$").accept_prob == 0.0


def test_form_checker_single_pass():
    m = build_form_checker(3)
    res = run_deterministic(m, "^010###110$")
    assert res.steps_max == 3 * 3 + 2


# ---------------------------------------------------------------- step accounting

def test_predicted_bound_holds_and_is_tight_on_all_fail_inputs():
    cm = build_grover_machine(4)
    res = run_qcfa_exact(cm.machine, encode_pair("0000", "0000"))
    assert res.steps_max == predicted_step_bound(cm, 14) == cm.predicted_steps
    hit = run_qcfa_exact(cm.machine, encode_pair("1111", "1111"))
    assert hit.steps_max <= cm.predicted_steps


def test_predicted_bound_parity2():
    cm = build_parity2_machine()
    measured = run_qcfa_exact(cm.machine, bracket("01")).steps_max
    bound = predicted_step_bound(cm, 4)
    assert measured <= bound
    assert bound <= 3 * (1 + 2) * (2 + 2) + (2 + 2) + (2 + 1)  # generous shape bound


def test_step_count_affine_in_t_and_n():
    def ident_program(n, t):
        dim = space_dim(n, 1)
        start = np.zeros(dim, dtype=complex)
        start[0] = 1.0
        us = tuple(np.eye(dim, dtype=complex) for _ in range(t + 1))
        return QueryProgram(n=n, m=1, start=start,
                            blocks=(QueryBlock(us, FinalMeasure(np.eye(dim, dtype=complex))),))

    # affine in t for fixed n
    for n in (2, 4):
        steps = [run_qcfa_exact(compile_query_program(ident_program(n, t)).machine,
                                bracket("0" * n)).steps_max
                 for t in (1, 2, 3, 4)]
        deltas = {b - a for a, b in zip(steps, steps[1:])}
        assert len(deltas) == 1
    # affine in n for fixed t
    for t in (1, 3):
        steps = [run_qcfa_exact(compile_query_program(ident_program(n, t)).machine,
                                bracket("0" * n)).steps_max
                 for n in (2, 4, 6, 8)]
        deltas = {b - a for a, b in zip(steps, steps[1:])}
        assert len(deltas) == 1


def test_and_oracle_cost_linear_per_call():
    # each oracle call costs 6n + 2 steps in the gadget walk
    for n in (2, 4, 8):
        p1 = grover_program(n, schedule=[1], repeats=1)
        p2 = grover_program(n, schedule=[2], repeats=1)
        c1 = compile_and_oracle_program(p1)
        c2 = compile_and_oracle_program(p2)
        assert c2.predicted_steps - c1.predicted_steps == 6 * n + 2


def test_grover_and_bound_scales_like_n_sqrt_n():
    for n in (4, 8, 16):
        cm = build_grover_machine(n)
        measured = run_qcfa_exact(cm.machine, encode_pair("0" * n, "0" * n)).steps_max
        assert measured <= cm.predicted_steps <= 80 * n * math.sqrt(n) + 200


def reachable_states(machine, symbols="01#^$", limit=100_000):
    from twoway.machines import Branch, QMeasure, QUnitary, Step
    seen = {machine.initial_classical}
    frontier = [machine.initial_classical]
    while frontier:
        state = frontier.pop()
        if state in machine.accepting or state in machine.rejecting:
            continue
        for symbol in symbols:
            action = machine.transition(state, symbol)
            if action is None:
                continue
            kind = type(action)
            if kind is Step or kind is QUnitary:
                nexts = [action.state]
            elif kind is Branch:
                nexts = [s for _, s, _ in action.choices]
            else:
                nexts = [s for s, _ in action.branches.values()]
            for ns in nexts:
                if ns not in seen:
                    seen.add(ns)
                    frontier.append(ns)
                    assert len(seen) <= limit
    return seen


def test_declared_state_count_covers_reachable():
    for cm in (build_parity2_machine(), build_grover_machine(2)):
        reachable = reachable_states(cm.machine)
        assert len(reachable) <= cm.state_counts["classical"]


def test_builder_doc_round_trip():
    cm = build_eq_fingerprint_2pfa(4)
    doc = machine_to_doc(cm)
    rebuilt = machine_from_doc(doc)
    assert machine_to_doc(rebuilt) == doc
    res_a = run_probabilistic_exact(cm.machine, encode_pair("0101", "0101"))
    res_b = run_probabilistic_exact(rebuilt.machine, encode_pair("0101", "0101"))
    assert res_a == res_b


def test_grover_builder_doc_round_trip():
    cm = build_grover_machine(4)
    doc = machine_to_doc(cm)
    rebuilt = machine_from_doc(doc)
    assert machine_to_doc(rebuilt) == doc
