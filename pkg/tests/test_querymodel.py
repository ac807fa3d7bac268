"""Oracle semantics, exact parity, and the verified-search program."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoway.querymodel import (
    FinalMeasure,
    QueryBlock,
    QueryProgram,
    diffusion_operator,
    grover_program,
    grover_schedule,
    oracle_matrix,
    parity2_program,
    run_query_program,
    space_dim,
    uniform_search_state,
)

bits = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(min_value=0, max_value=2 ** n - 1)))


def bitstring(n, value):
    return format(value, f"0{n}b")


def test_oracle_all_zero_is_identity():
    u = oracle_matrix("0000", m=2)
    assert np.array_equal(u.diag, np.ones(space_dim(4, 2)))


def test_oracle_single_bit():
    u = oracle_matrix("1", m=1)
    assert np.array_equal(u.diag, [1.0, -1.0])


def test_oracle_101_reads_off_definition():
    u = oracle_matrix("101", m=1)
    assert np.array_equal(u.diag, [1.0, -1.0, 1.0, -1.0])


def test_oracle_repeats_phase_across_register_copies():
    u = oracle_matrix("10", m=3)
    # indices: |0,1..3> then |1,1..3> then |2,1..3>
    assert np.array_equal(u.diag, [1, 1, 1, -1, -1, -1, 1, 1, 1])


@settings(max_examples=50, deadline=None)
@given(bits)
def test_oracle_involution(nv):
    n, v = nv
    u = oracle_matrix(bitstring(n, v), m=2)
    assert np.array_equal(u.diag * u.diag, np.ones_like(u.diag))


@settings(max_examples=50, deadline=None)
@given(bits, st.integers(min_value=0, max_value=2 ** 6 - 1))
def test_oracle_composition_is_xor(nv, w):
    n, v = nv
    w %= 2 ** n
    x, y = bitstring(n, v), bitstring(n, w)
    xy = bitstring(n, v ^ w)
    prod = oracle_matrix(x).diag * oracle_matrix(y).diag
    assert np.array_equal(prod, oracle_matrix(xy).diag)


def test_trivial_program_rejects_everything():
    n, m = 3, 1
    dim = space_dim(n, m)
    start = np.zeros(dim, dtype=complex)
    start[0] = 1.0
    block = QueryBlock(unitaries=(np.eye(dim, dtype=complex),),
                       terminal=FinalMeasure(np.zeros((dim, dim), dtype=complex)))
    p = QueryProgram(n=n, m=m, start=start, blocks=(block,))
    for v in range(2 ** n):
        res = run_query_program(p, bitstring(n, v))
        assert res.accept_prob == 0.0
        assert res.queries == 0


def test_parity2_truth_table():
    p = parity2_program()
    assert p.straight_line and p.query_count == 1
    for x, expected in [("00", 0), ("11", 0), ("01", 1), ("10", 1)]:
        res = run_query_program(p, x)
        assert res.accept_prob == pytest.approx(expected, abs=1e-12)
        assert res.queries == 1


def test_parity2_is_exact():
    p = parity2_program()
    for x in ("00", "01", "10", "11"):
        prob = run_query_program(p, x).accept_prob
        assert min(abs(prob), abs(prob - 1.0)) <= 1e-9


def test_grover_schedule_shape():
    assert grover_schedule(4) == [2, 2, 1]
    assert grover_schedule(16) == [4, 3, 2, 2, 1]


def test_diffusion_fixes_index_zero():
    d = diffusion_operator(4)
    e0 = np.zeros(5, dtype=complex)
    e0[0] = 1.0
    assert np.array_equal(d @ e0, e0)


def test_grover_no_marked_item_is_exactly_zero():
    p = grover_program(4)
    assert run_query_program(p, "0000").accept_prob == 0.0


def test_grover_single_marked_item():
    p = grover_program(4)
    res = run_query_program(p, "0001")
    assert res.accept_prob >= 2.0 / 3.0
    assert res.queries == 3 * sum(grover_schedule(4))


def test_grover_all_marked():
    p = grover_program(4)
    assert run_query_program(p, "1111").accept_prob >= 2.0 / 3.0


def test_grover_exhaustive_small_n():
    for n in (2, 4):
        p = grover_program(n)
        for v in range(1, 2 ** n):
            assert run_query_program(p, bitstring(n, v)).accept_prob >= 2.0 / 3.0
        assert run_query_program(p, "0" * n).accept_prob == 0.0


def test_grover_weight_one_at_n16():
    p = grover_program(16)
    budget = 3 * sum(math.ceil((math.pi / 4) * math.sqrt(16 / 2 ** j)) for j in range(5))
    for i in range(16):
        x = "".join("1" if k == i else "0" for k in range(16))
        res = run_query_program(p, x)
        assert res.accept_prob >= 2.0 / 3.0
        assert res.queries <= budget


def test_accept_prob_in_unit_interval_random_programs():
    rng = np.random.default_rng(123)
    for _ in range(10):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 3))
        dim = space_dim(n, m)
        t = int(rng.integers(0, 4))
        us = []
        for _ in range(t + 1):
            z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            q, r = np.linalg.qr(z)
            us.append(q * (np.diag(r) / np.abs(np.diag(r))))
        start = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        start /= np.linalg.norm(start)
        keep = rng.integers(0, 2, size=dim).astype(bool)
        proj = np.diag(keep.astype(complex))
        p = QueryProgram(n=n, m=m, start=start,
                         blocks=(QueryBlock(tuple(us), FinalMeasure(proj)),))
        for v in range(2 ** n):
            prob = run_query_program(p, bitstring(n, v)).accept_prob
            assert -1e-9 <= prob <= 1.0 + 1e-9


def test_program_validation():
    dim = space_dim(2, 1)
    ident = np.eye(dim, dtype=complex)
    start = np.zeros(dim, dtype=complex)
    start[0] = 1.0
    good = QueryBlock((ident,), FinalMeasure(np.zeros((dim, dim))))
    with pytest.raises(ValueError):
        QueryProgram(n=2, m=1, start=start[:-1], blocks=(good,))
    with pytest.raises(ValueError):
        # second block without a prepared state
        QueryProgram(n=2, m=1, start=start,
                     blocks=(QueryBlock((ident,), FinalMeasure(np.zeros((dim, dim)))),
                             QueryBlock((ident,), FinalMeasure(np.zeros((dim, dim))))))


def test_input_length_checked():
    with pytest.raises(ValueError):
        run_query_program(parity2_program(), "011")
