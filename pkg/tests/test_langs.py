"""Reference predicates, tape encoding, and the not-all-equal tower."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twoway.langs import (
    LanguageId,
    bracket,
    decode_pair,
    encode_pair,
    eq_predicate,
    int_predicate,
    member,
    ne_eval,
    rne_predicate,
)


def ne_table_eval(d: int, bits: str) -> int:
    """Independent bottom-up evaluator used as the oracle for ne_eval."""
    values = [int(b) for b in bits]
    for _ in range(d):
        values = [0 if values[i] == values[i + 1] == values[i + 2] else 1
                  for i in range(0, len(values), 3)]
    assert len(values) == 1
    return values[0]


def test_eq_predicate():
    assert eq_predicate("00", "00") == 1
    assert eq_predicate("01", "10") == 0
    assert eq_predicate("1011", "1011") == 1
    with pytest.raises(ValueError):
        eq_predicate("0", "00")


def test_int_predicate():
    assert int_predicate("10", "01") == 0
    assert int_predicate("11", "01") == 1
    assert int_predicate("0000", "1111") == 0  # empty intersection with all-zero x


def test_ne_base_cases():
    assert ne_eval(1, "000") == 0
    assert ne_eval(1, "111") == 0
    assert ne_eval(1, "010") == 1
    assert ne_eval(0, "1") == 1
    assert ne_eval(0, "0") == 0


def test_ne_depth2_hand_case():
    # children evaluate to 0, 0, 1 -> not all equal
    assert ne_eval(2, "000111010") == 1


def test_ne_exhaustive_against_table_evaluator():
    for d in (1, 2):
        for bits in itertools.product("01", repeat=3 ** d):
            s = "".join(bits)
            assert ne_eval(d, s) == ne_table_eval(d, s)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 9 - 1), st.permutations([0, 1, 2]))
def test_ne_block_permutation_symmetry(value, perm):
    bits = format(value, "09b")
    blocks = [bits[0:3], bits[3:6], bits[6:9]]
    shuffled = "".join(blocks[i] for i in perm)
    assert ne_eval(2, bits) == ne_eval(2, shuffled)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 9 - 1))
def test_rne_against_all_ones(value):
    bits = format(value, "09b")
    assert rne_predicate(bits, "1" * 9, 2) == ne_eval(2, bits)


def test_rne_examples():
    assert rne_predicate("000", "000", 1) == 0
    assert rne_predicate("111", "010", 1) == 1
    assert rne_predicate("000", "111", 1) == 0


def test_encode_decode():
    assert encode_pair("0", "1") == "^0#1$"
    assert encode_pair("01", "10") == "^01##10$"
    for x, y in [("0", "1"), ("0110", "1001")]:
        assert decode_pair(encode_pair(x, y)) == (x, y)
    assert decode_pair("^01#10$") is None
    assert decode_pair("^##$") is None


def test_bracket_rejects_bad_symbols():
    with pytest.raises(ValueError):
        bracket("01a")


def test_member():
    assert member(LanguageId("eq", 2), "^01##01$") == 1
    assert member(LanguageId("int", 2), "^10##01$") == 0
    assert member(LanguageId("ne", 3), encode_pair("111", "010")) == 1
    # malformed tapes are non-members, not errors
    assert member(LanguageId("eq", 2), "^01#01$") == 0
    assert member(LanguageId("eq", 2), "garbage") == 0


def test_member_matches_predicate_exhaustively():
    for n in (1, 2, 3):
        lang = LanguageId("eq", n)
        for xv in range(2 ** n):
            for yv in range(2 ** n):
                x, y = format(xv, f"0{n}b"), format(yv, f"0{n}b")
                assert member(lang, encode_pair(x, y)) == eq_predicate(x, y)


def test_language_id_validation():
    with pytest.raises(ValueError):
        LanguageId("ne", 5)
    with pytest.raises(ValueError):
        LanguageId("foo", 4)
    assert LanguageId("ne", 9).depth == 2
