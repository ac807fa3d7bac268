"""Ground-truth predicates and tape encoders for the benchmark languages.

These are the brute-force reference oracles every machine gets tested
against: equality and intersection of two n-bit strings, the depth-d
ternary not-all-equal composition, and its AND-restricted variant. Tapes
are plain strings over {0,1,#} bracketed by the end markers.
"""

from __future__ import annotations

from dataclasses import dataclass

LEFT_MARKER = "^"
RIGHT_MARKER = "$"
SEPARATOR = "#"
INTERIOR_SYMBOLS = frozenset("01#")


def bracket(interior: str) -> str:
    """Wrap an interior string in end markers, validating the alphabet."""
    bad = set(interior) - INTERIOR_SYMBOLS
    if bad:
        raise ValueError(f"invalid tape symbols: {sorted(bad)}")
    return LEFT_MARKER + interior + RIGHT_MARKER


def is_bracketed(tape: str) -> bool:
    return (
        len(tape) >= 2
        and tape[0] == LEFT_MARKER
        and tape[-1] == RIGHT_MARKER
        and not (set(tape[1:-1]) - INTERIOR_SYMBOLS)
    )


def _check_bits(name: str, s: str):
    if set(s) - {"0", "1"}:
        raise ValueError(f"{name} must be a bit string, got {s!r}")


def eq_predicate(x: str, y: str) -> int:
    """1 iff x = y (bit strings of equal length)."""
    _check_bits("x", x)
    _check_bits("y", y)
    if len(x) != len(y):
        raise ValueError("length mismatch")
    return int(x == y)


def int_predicate(x: str, y: str) -> int:
    """1 iff some index i has x_i = y_i = 1."""
    _check_bits("x", x)
    _check_bits("y", y)
    if len(x) != len(y):
        raise ValueError("length mismatch")
    return int(any(a == "1" and b == "1" for a, b in zip(x, y)))


def ne_eval(d: int, bits: str) -> int:
    """Depth-d not-all-equal composition over 3^d bits.

    Depth 0 returns the single bit; each level applies "0 if all three
    children are equal, 1 otherwise" to the three child evaluations.
    """
    _check_bits("bits", bits)
    if d < 0:
        raise ValueError("depth must be nonnegative")
    if len(bits) != 3 ** d:
        raise ValueError(f"expected 3^{d} = {3 ** d} bits, got {len(bits)}")
    if d == 0:
        return int(bits)
    third = len(bits) // 3
    a = ne_eval(d - 1, bits[:third])
    b = ne_eval(d - 1, bits[third:2 * third])
    c = ne_eval(d - 1, bits[2 * third:])
    return 0 if a == b == c else 1


def rne_predicate(x: str, y: str, d: int) -> int:
    """ne_eval of the bitwise AND of x and y (both of length 3^d)."""
    _check_bits("x", x)
    _check_bits("y", y)
    if len(x) != len(y) or len(x) != 3 ** d:
        raise ValueError(f"x and y must both have length 3^{d}")
    conj = "".join("1" if a == "1" and b == "1" else "0" for a, b in zip(x, y))
    return ne_eval(d, conj)


def encode_pair(x: str, y: str) -> str:
    """Tape ^x #^n y$ for an n-bit pair."""
    _check_bits("x", x)
    _check_bits("y", y)
    if len(x) != len(y):
        raise ValueError("length mismatch")
    return bracket(x + SEPARATOR * len(x) + y)


def decode_pair(tape: str) -> tuple[str, str] | None:
    """Inverse of encode_pair; None when the tape is not of that shape."""
    if not is_bracketed(tape):
        return None
    interior = tape[1:-1]
    if len(interior) % 3 != 0:
        return None
    n = len(interior) // 3
    if n == 0:
        return None
    x, sep, y = interior[:n], interior[n:2 * n], interior[2 * n:]
    if sep != SEPARATOR * n or set(x + y) - {"0", "1"}:
        return None
    return x, y


@dataclass(frozen=True)
class LanguageId:
    """One of the pair languages: kind in {"eq", "int", "ne"} with size n.

    The "ne" family requires n to be a power of 3 (depth = log3 n).
    """

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in ("eq", "int", "ne"):
            raise ValueError(f"unknown language kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "ne" and 3 ** self.depth != self.n:
            raise ValueError("ne languages require n to be a power of 3")

    @property
    def depth(self) -> int:
        d = 0
        m = self.n
        while m > 1:
            m //= 3
            d += 1
        return d


def member(lang: LanguageId, tape: str) -> int:
    """1 iff the tape is well-formed for lang's shape and the predicate holds.

    Malformed tapes are non-members, mirroring automaton rejection.
    """
    pair = decode_pair(tape)
    if pair is None or len(pair[0]) != lang.n:
        return 0
    x, y = pair
    if lang.kind == "eq":
        return eq_predicate(x, y)
    if lang.kind == "int":
        return int_predicate(x, y)
    return rne_predicate(x, y, lang.depth)
