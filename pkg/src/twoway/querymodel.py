"""Input-oracle query programs and their exact evaluation.

A program runs over the Hilbert space with basis |i,j> for i in 0..n and
j in 1..m (index i = 0 is oracle-neutral). The input enters only through the
phase oracle, which flips the sign of |i,j> exactly when bit i of the input
is 1. Programs are sequences of blocks; a block optionally reloads a prepared
state, alternates input-independent unitaries with oracle calls, and ends
either in a final two-outcome measurement (straight-line programs) or in an
index measurement whose decoded index is classically verified against the
input (the search-style branching used for intersection).

Evaluation is exact: the full branch tree is walked with branch merging, so
acceptance probabilities carry no sampling error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .qcore import UnitaryOp


def basis_index(i: int, j: int, m: int) -> int:
    """Flat index of |i,j> (i in 0..n, j in 1..m)."""
    return i * m + (j - 1)


def space_dim(n: int, m: int) -> int:
    return (n + 1) * m


@dataclass(frozen=True)
class FinalMeasure:
    """Terminal two-outcome measurement; accept probability is ||P v||^2."""

    accept_projector: np.ndarray


@dataclass(frozen=True)
class IndexVerify:
    """Terminal index measurement with classical verification of the outcome.

    Measuring collapses to some index i; the consumer then checks the input
    bit at i classically (charged zero queries). A verified hit accepts;
    otherwise control falls through to the next block, or rejects after the
    last one. Index 0 always fails verification.
    """


@dataclass(frozen=True)
class QueryBlock:
    """One straight-line segment: U_0, O, U_1, O, ..., O, U_k plus terminal.

    `prepare_target` (when set) is the state loaded at block entry before
    U_0 is applied; blocks after a measurement re-prepare from the collapsed
    basis state, which the compiled automaton realizes with one unitary.
    """

    unitaries: tuple
    terminal: object
    prepare_target: np.ndarray | None = None

    @property
    def oracle_calls(self) -> int:
        return len(self.unitaries) - 1


@dataclass(frozen=True)
class QueryProgram:
    n: int
    m: int
    start: np.ndarray
    blocks: tuple
    builder: tuple | None = None   # (name, params) provenance

    def __post_init__(self):
        dim = space_dim(self.n, self.m)
        if self.start.shape != (dim,):
            raise ValueError("start state dimension mismatch")
        for idx, block in enumerate(self.blocks):
            if not block.unitaries:
                raise ValueError("each block needs at least one unitary")
            if isinstance(block.terminal, FinalMeasure) and idx != len(self.blocks) - 1:
                raise ValueError("a final measurement must be the last block")
            if idx > 0 and block.prepare_target is None:
                # after a measurement the state has collapsed; continuation
                # blocks must reload a declared state
                raise ValueError("blocks after the first must set prepare_target")

    @property
    def query_count(self) -> int:
        """Oracle calls on the maximal path (all blocks traversed)."""
        return sum(b.oracle_calls for b in self.blocks)

    @property
    def straight_line(self) -> bool:
        return (len(self.blocks) == 1
                and isinstance(self.blocks[0].terminal, FinalMeasure)
                and self.blocks[0].prepare_target is None)


def oracle_matrix(x: str, m: int = 1) -> UnitaryOp:
    """Diagonal phase oracle for input x: +1 on |0,j>, (-1)^{x_i} on |i,j>."""
    n = len(x)
    if n < 1 or m < 1:
        raise ValueError("need n >= 1 and m >= 1")
    if set(x) - {"0", "1"}:
        raise ValueError(f"input must be a bit string, got {x!r}")
    diag = np.ones(space_dim(n, m), dtype=np.complex128)
    for i, bit in enumerate(x, start=1):
        if bit == "1":
            diag[basis_index(i, 1, m):basis_index(i, m, m) + 1] = -1.0
    return UnitaryOp.diagonal(diag)


class QueryRunResult(NamedTuple):
    accept_prob: float
    queries: int


def _index_probs(amps: np.ndarray, n: int, m: int) -> list[float]:
    blocks = amps.reshape(n + 1, m)
    return [float(np.vdot(row, row).real) for row in blocks]


def run_query_program(p: QueryProgram, x: str) -> QueryRunResult:
    """Exact acceptance probability of p on input x.

    Because continuation blocks always re-prepare a declared state, the
    branch tree collapses to a single fail-mass scalar flowing block to
    block; no sampling and no tree blow-up.
    """
    if len(x) != p.n:
        raise ValueError(f"input length {len(x)} does not match program n={p.n}")
    oracle = oracle_matrix(x, p.m)
    accept = 0.0
    mass = 1.0
    for block in p.blocks:
        v = block.prepare_target if block.prepare_target is not None else p.start
        v = block.unitaries[0] @ v
        for u in block.unitaries[1:]:
            v = oracle.apply_raw(v)
            v = u @ v
        if isinstance(block.terminal, FinalMeasure):
            projected = block.terminal.accept_projector @ v
            accept += mass * float(np.vdot(projected, projected).real)
            mass = 0.0
            break
        # index measurement: verified hits accept, the rest falls through
        hit = 0.0
        for i, prob in enumerate(_index_probs(v, p.n, p.m)):
            if i >= 1 and x[i - 1] == "1":
                hit += prob
        accept += mass * hit
        mass *= max(1.0 - hit, 0.0)
        if mass <= 0.0:
            break
    return QueryRunResult(min(accept, 1.0), p.query_count)


def _block_unitary(dim: int, lo: int, hi: int, mat2: np.ndarray) -> np.ndarray:
    """Embed a small matrix on basis indices [lo, hi); identity elsewhere."""
    full = np.eye(dim, dtype=np.complex128)
    full[lo:hi, lo:hi] = mat2
    return full


def parity2_program() -> QueryProgram:
    """Exact one-query program computing x1 xor x2 (n = 2, m = 1).

    Start in |1,1>, rotate into the even superposition of |1,1> and |2,1>,
    query, rotate back; the final state is |1,1> for equal bits and |2,1>
    for unequal bits, measured against the |2,1> projector.
    """
    n, m = 2, 1
    dim = space_dim(n, m)
    h = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
    u = _block_unitary(dim, 1, 3, h)
    start = np.zeros(dim, dtype=np.complex128)
    start[basis_index(1, 1, m)] = 1.0
    accept = np.zeros((dim, dim), dtype=np.complex128)
    accept[basis_index(2, 1, m), basis_index(2, 1, m)] = 1.0
    block = QueryBlock(unitaries=(u, u), terminal=FinalMeasure(accept))
    return QueryProgram(n=n, m=m, start=start, blocks=(block,),
                        builder=("parity2", {}))


def grover_schedule(n: int) -> list[int]:
    """Iteration counts of the halving ladder: ceil((pi/4) sqrt(n / 2^j))."""
    if n < 2:
        raise ValueError("need n >= 2")
    levels = math.ceil(math.log2(n))
    return [math.ceil((math.pi / 4) * math.sqrt(n / 2 ** j)) for j in range(levels + 1)]


def uniform_search_state(n: int) -> np.ndarray:
    """Uniform superposition over |1..n> (index 0 left empty); m = 1."""
    amps = np.zeros(n + 1, dtype=np.complex128)
    amps[1:] = 1.0 / math.sqrt(n)
    return amps


def diffusion_operator(n: int) -> np.ndarray:
    """Reflection 2|u><u| - I on the i >= 1 block; |0,j> states are fixed."""
    dim = n + 1
    u = uniform_search_state(n)
    d = 2.0 * np.outer(u, u.conj()) - np.eye(dim, dtype=np.complex128)
    d[0, 0] = 1.0
    d[0, 1:] = 0.0
    d[1:, 0] = 0.0
    return d


def grover_program(n: int, schedule: list[int] | None = None, repeats: int = 3) -> QueryProgram:
    """Search program with a fixed halving schedule and classical verification.

    Each block prepares the uniform state over |1..n>, runs its allotted
    oracle+diffusion iterations, measures the index, and verifies the decoded
    index classically; all-blocks-fail rejects. One-sided: with no 1-bit in
    the input, no verification can succeed, so the accept probability is
    exactly 0. Total oracle calls are repeats * sum(schedule).
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if schedule is None:
        schedule = grover_schedule(n)
    m = 1
    uniform = uniform_search_state(n)
    identity = np.eye(n + 1, dtype=np.complex128)
    diffusion = diffusion_operator(n)
    blocks = []
    for _ in range(repeats):
        for iters in schedule:
            blocks.append(QueryBlock(
                unitaries=(identity,) + (diffusion,) * iters,
                terminal=IndexVerify(),
                prepare_target=uniform,
            ))
    return QueryProgram(n=n, m=m, start=uniform, blocks=tuple(blocks),
                        builder=("grover", {"n": n, "schedule": list(schedule),
                                            "repeats": repeats}))
