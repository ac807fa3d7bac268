"""Builders that lower query programs and known protocols onto two-way machines.

compile_query_program
    Lower a query program to a quantum-classical machine over tapes ^x$.
    The input enters only through per-cell phase rotations applied during
    left-to-right passes; block unitaries fire at the end markers. One extra
    quantum basis state (index 0) serves as the fixed start state that the
    first end-marker step maps onto the prepared program state.

compile_and_oracle_program
    Same lowering over pair tapes ^x #^n y$, where every oracle call is
    realized by a three-pass head walk with one auxiliary qubit: a forward
    pass entangles the aux bit with the x bits, the y pass applies the
    conditional phase, and a right-to-left pass disentangles. The net effect
    on states with aux = 0 is the phase oracle for the bitwise AND of x and
    y; the aux bit returns to 0 exactly (all gadget operators are
    permutations or sign flips, so no rounding enters).

build_eq_fingerprint_2pfa
    The probabilistic equality recognizer: branch uniformly over primes at
    the left marker, stream both halves of the tape through the running
    residues of their binary values, accept iff the residues agree. Form
    checking is fused into the same single left-to-right sweep, so the head
    crosses into the right half exactly once.

build_form_checker
    Stand-alone deterministic shape acceptor (one pass, linear states).

All verification walks of the search-style machines are padded to a fixed
length so that failed branches re-enter the next round in lockstep; the
exact engine then merges them and the outcome tree stays narrow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from . import serialization
from .langs import LEFT_MARKER as LM
from .langs import RIGHT_MARKER as RM
from .machines import Branch, MachineError, MachineSpec, QMeasure, QUnitary, Step
from .qcore import ProjectiveMeasurement, StateVector, UnitaryOp, column_unitary
from .querymodel import (
    FinalMeasure,
    IndexVerify,
    QueryProgram,
    basis_index,
    grover_program,
    parity2_program,
    space_dim,
)

ACCEPT = "acc"
REJECT = "rej"


@dataclass(frozen=True)
class CompiledMachine:
    """A built machine plus its provenance and closed-form step bound."""

    machine: MachineSpec
    provenance: dict
    predicted_steps: int
    state_counts: dict

    @property
    def kind(self) -> str:
        return self.machine.kind


def _embed(vec: np.ndarray, dim: int, offset: int = 1) -> np.ndarray:
    out = np.zeros(dim, dtype=np.complex128)
    out[offset:offset + vec.size] = vec
    return out


def _embedded_unitary(mat: np.ndarray, dim: int) -> UnitaryOp:
    full = np.eye(dim, dtype=np.complex128)
    full[1:, 1:] = mat
    return UnitaryOp(full, _checked=True)


def _phase_op(dim: int, indices) -> UnitaryOp:
    diag = np.ones(dim, dtype=np.complex128)
    diag[list(indices)] = -1.0
    return UnitaryOp.diagonal(diag)


def _swap_blocks_op(dim: int, block_a, block_b) -> UnitaryOp:
    """Permutation exchanging two equal-size groups of basis indices."""
    m = np.eye(dim, dtype=np.complex128)
    for a, b in zip(block_a, block_b):
        if a != b:
            m[[a, b]] = m[[b, a]]
    return UnitaryOp(m, _checked=True)


def _check_blocks(p: QueryProgram):
    for block in p.blocks:
        if isinstance(block.terminal, IndexVerify):
            if p.m != 1:
                raise MachineError("verified-search blocks require m = 1")
            if block.oracle_calls < 1:
                raise MachineError("verified-search blocks need at least one oracle call")


def _entry_target(p: QueryProgram, b: int) -> np.ndarray:
    block = p.blocks[b]
    target = block.prepare_target if block.prepare_target is not None else p.start
    return block.unitaries[0] @ target


def compile_query_program(p: QueryProgram) -> CompiledMachine:
    """Lower a query program to a quantum-classical machine over ^x$ tapes.

    The compiled machine form-checks the input, rewinds, and then replays
    the program: each oracle call becomes one left-to-right pass applying a
    per-cell sign flip on the scanned bit's index block, each block unitary
    fires at an end marker, and the terminal measurement happens in place.
    Acceptance probabilities match the query-level evaluation because the
    very same operators are applied in the very same order.
    """
    _check_blocks(p)
    n, m = p.n, p.m
    dim = space_dim(n, m) + 1
    blocks = p.blocks

    def emb(i, j):
        return 1 + basis_index(i, j, m)

    identity = UnitaryOp.identity(dim)
    entry_ops = []
    for b in range(len(blocks)):
        source = 0 if b == 0 else emb(1, 1)
        entry_ops.append(column_unitary(dim, source, _embed(_entry_target(p, b), dim)))
    mid_ops = {(b, k): _embedded_unitary(block.unitaries[k], dim)
               for b, block in enumerate(blocks) for k in range(1, len(block.unitaries))}
    phase_ops = {i: _phase_op(dim, [emb(i, j) for j in range(1, m + 1)])
                 for i in range(1, n + 1)}
    swap_ops = {i: _swap_blocks_op(dim, [emb(i, j) for j in range(1, m + 1)],
                                   [emb(1, j) for j in range(1, m + 1)])
                for i in range(0, n + 1)}
    index_meas = ProjectiveMeasurement.basis_groups(
        dim,
        [[0] + [emb(0, j) for j in range(1, m + 1)]]
        + [[emb(i, j) for j in range(1, m + 1)] for i in range(1, n + 1)],
        list(range(n + 1)))
    final_meas = {}
    for b, block in enumerate(blocks):
        if isinstance(block.terminal, FinalMeasure):
            accept = np.zeros((dim, dim), dtype=np.complex128)
            accept[1:, 1:] = block.terminal.accept_projector
            reject = np.eye(dim, dtype=np.complex128) - accept
            final_meas[b] = ProjectiveMeasurement([reject, accept], [0, 1])

    last = len(blocks) - 1

    def after_entry(b):
        if blocks[b].oracle_calls == 0:
            return ("sweep", b)
        return ("cell", b, 1, 1)

    def transition(state, symbol):
        tag = state[0]
        if tag == "form":
            i = state[1]
            if i == 0:
                return QUnitary(identity, ("form", 1), 1)
            if i <= n:
                if symbol in ("0", "1"):
                    return QUnitary(identity, ("form", i + 1), 1)
                return QUnitary(identity, REJECT, 0)
            if symbol == RM:
                return QUnitary(identity, ("rewind",), -1)
            return QUnitary(identity, REJECT, 0)
        if tag == "rewind":
            if symbol == LM:
                return QUnitary(entry_ops[0], after_entry(0), 1)
            return QUnitary(identity, ("rewind",), -1)
        if tag == "sweep":
            b = state[1]
            if symbol == RM:
                return QMeasure(final_meas[b], {0: (REJECT, 0), 1: (ACCEPT, 0)})
            return QUnitary(identity, ("sweep", b), 1)
        if tag == "cell":
            _, b, k, i = state
            if symbol not in ("0", "1"):
                return QUnitary(identity, REJECT, 0)
            op = phase_ops[i] if symbol == "1" else identity
            nxt = ("cell", b, k, i + 1) if i < n else ("atend", b, k)
            return QUnitary(op, nxt, 1)
        if tag == "atend":
            _, b, k = state
            op = mid_ops[(b, k)]
            if k < blocks[b].oracle_calls:
                return QUnitary(op, ("back", b, k), -1)
            if isinstance(blocks[b].terminal, FinalMeasure):
                return QUnitary(op, ("fmeas", b), 0)
            return QUnitary(op, ("back", b, k), -1)
        if tag == "back":
            _, b, k = state
            if symbol != LM:
                return QUnitary(identity, ("back", b, k), -1)
            if k < blocks[b].oracle_calls:
                return QUnitary(identity, ("cell", b, k + 1, 1), 1)
            branches = {0: (("vswap0", b), 1)}
            branches.update({i: (("vswap", b, i), 1) for i in range(1, n + 1)})
            return QMeasure(index_meas, branches)
        if tag == "fmeas":
            b = state[1]
            return QMeasure(final_meas[b], {0: (REJECT, 0), 1: (ACCEPT, 0)})
        if tag == "vswap":
            _, b, i = state
            if i == 1:
                nxt = (ACCEPT, 0) if symbol == "1" else (("wrf", b), 1)
                return QUnitary(swap_ops[1], *nxt)
            return QUnitary(swap_ops[i], ("ver", b, i - 1), 1)
        if tag == "vswap0":
            b = state[1]
            return QUnitary(swap_ops[0], ("wrf", b), 1)
        if tag == "ver":
            _, b, c = state
            if c > 1:
                return QUnitary(identity, ("ver", b, c - 1), 1)
            if symbol == "1":
                return QUnitary(identity, ACCEPT, 0)
            return QUnitary(identity, ("wrf", b), 1)
        if tag == "wrf":
            b = state[1]
            if symbol == RM:
                return QUnitary(identity, ("wlf", b), -1)
            return QUnitary(identity, ("wrf", b), 1)
        if tag == "wlf":
            b = state[1]
            if symbol != LM:
                return QUnitary(identity, ("wlf", b), -1)
            if b == last:
                return QUnitary(identity, REJECT, 0)
            return QUnitary(entry_ops[b + 1], after_entry(b + 1), 1)
        raise MachineError(f"unknown state {state!r}")

    classical = _plain_state_count(p)
    t_total = p.query_count
    machine = MachineSpec(
        kind="quantum-classical",
        classical_state_count=classical,
        quantum_dim=dim,
        initial_classical=("form", 0),
        transition=transition,
        accepting=frozenset([ACCEPT]),
        rejecting=frozenset([REJECT]),
        initial_quantum=StateVector.basis(dim, 0),
        query_count=t_total,
        builder=(p.builder[0] + "_compiled", p.builder[1]) if p.builder else None,
    )
    return CompiledMachine(
        machine=machine,
        provenance={"compiler": "query", "n": n, "m": m, "queries": t_total,
                    "blocks": [b.oracle_calls for b in blocks],
                    "program": p.builder[0] if p.builder else "anonymous"},
        predicted_steps=_plain_step_bound(p),
        state_counts={"classical": classical, "quantum": dim,
                      "paper_style_classical": (n + 1) ** 2},
    )


def _plain_step_bound(p: QueryProgram) -> int:
    n = p.n
    total = (n + 2) + (n + 1)          # form pass + rewind (entry included)
    for block in p.blocks:
        t = block.oracle_calls
        if isinstance(block.terminal, FinalMeasure):
            if t == 0:
                total += n + 1                      # sweep + measure at $
            else:
                total += (t - 1) * (2 * n + 2) + (n + 2)
        else:
            total += t * (2 * n + 2) + (2 * n + 2)  # passes + verify round
    return total


def _plain_state_count(p: QueryProgram) -> int:
    n = p.n
    count = (n + 2) + 1 + 2            # form, rewind, accept/reject
    for block in p.blocks:
        t = block.oracle_calls
        count += t * (n + 2)           # cells + atend + back
        if isinstance(block.terminal, FinalMeasure):
            count += 1                 # sweep (t = 0) or fmeas
        else:
            count += 2 * n + 2         # vswap*, vswap0, ver, wrf, wlf
    return count


def compile_and_oracle_program(p: QueryProgram) -> CompiledMachine:
    """Lower a query program onto pair tapes, AND-combining the two halves.

    Every oracle call of the program becomes a three-pass gadget walk with
    one auxiliary qubit, so the machine queries the bitwise AND of x and y
    without ever holding it; index verification reads both x_i and y_i by
    moving the head. Verification walks have input-independent length, so
    failed rounds re-synchronize.
    """
    _check_blocks(p)
    n, m = p.n, p.m
    qdim = space_dim(n, m)
    dim = 2 * qdim + 1
    blocks = p.blocks

    def emb(i, j, aux):
        return 1 + 2 * basis_index(i, j, m) + aux

    identity = UnitaryOp.identity(dim)
    entry_ops = []
    for b in range(len(blocks)):
        source = 0 if b == 0 else emb(1, 1, 0)
        target = np.zeros(dim, dtype=np.complex128)
        target[1::2] = _entry_target(p, b)       # aux bit 0 interleaved layout
        entry_ops.append(column_unitary(dim, source, target))
    mid_ops = {}
    for b, block in enumerate(blocks):
        for k in range(1, len(block.unitaries)):
            full = np.eye(dim, dtype=np.complex128)
            full[1:, 1:] = np.kron(block.unitaries[k], np.eye(2))
            mid_ops[(b, k)] = UnitaryOp(full, _checked=True)
    u_gad = {i: _swap_blocks_op(dim, [emb(i, j, 0) for j in range(1, m + 1)],
                                [emb(i, j, 1) for j in range(1, m + 1)])
             for i in range(1, n + 1)}
    v_gad = {i: _phase_op(dim, [emb(i, j, 1) for j in range(1, m + 1)])
             for i in range(1, n + 1)}
    swap_ops = {i: _swap_blocks_op(
        dim,
        [emb(i, j, a) for j in range(1, m + 1) for a in (0, 1)],
        [emb(1, j, a) for j in range(1, m + 1) for a in (0, 1)])
        for i in range(0, n + 1)}
    index_meas = ProjectiveMeasurement.basis_groups(
        dim,
        [[0] + [emb(0, j, a) for j in range(1, m + 1) for a in (0, 1)]]
        + [[emb(i, j, a) for j in range(1, m + 1) for a in (0, 1)]
           for i in range(1, n + 1)],
        list(range(n + 1)))
    final_meas = {}
    for b, block in enumerate(blocks):
        if isinstance(block.terminal, FinalMeasure):
            accept = np.zeros((dim, dim), dtype=np.complex128)
            accept[1:, 1:] = np.kron(block.terminal.accept_projector, np.eye(2))
            reject = np.eye(dim, dtype=np.complex128) - accept
            final_meas[b] = ProjectiveMeasurement([reject, accept], [0, 1])

    last = len(blocks) - 1

    def after_entry(b):
        if blocks[b].oracle_calls == 0:
            return ("sweep", b)
        return ("gx", b, 1, 1)

    def gadget_bit(symbol):
        return symbol == "1"

    def transition(state, symbol):
        tag = state[0]
        if tag == "form":
            i = state[1]
            if i == 0:
                return QUnitary(identity, ("form", 1), 1)
            if i <= n or 2 * n < i <= 3 * n:
                ok = symbol in ("0", "1")
            elif i <= 2 * n:
                ok = symbol == "#"
            else:
                if symbol == RM:
                    return QUnitary(identity, ("rewind",), -1)
                return QUnitary(identity, REJECT, 0)
            if ok:
                return QUnitary(identity, ("form", i + 1), 1)
            return QUnitary(identity, REJECT, 0)
        if tag == "rewind":
            if symbol == LM:
                return QUnitary(entry_ops[0], after_entry(0), 1)
            return QUnitary(identity, ("rewind",), -1)
        if tag == "sweep":
            b = state[1]
            if symbol == RM:
                return QMeasure(final_meas[b], {0: (REJECT, 0), 1: (ACCEPT, 0)})
            return QUnitary(identity, ("sweep", b), 1)
        if tag == "gx":
            _, b, k, i = state
            op = u_gad[i] if gadget_bit(symbol) else identity
            nxt = ("gx", b, k, i + 1) if i < n else ("gs", b, k)
            return QUnitary(op, nxt, 1)
        if tag == "gs":
            _, b, k = state
            if symbol == "#":
                return QUnitary(identity, ("gs", b, k), 1)
            op = v_gad[1] if gadget_bit(symbol) else identity
            nxt = ("gy", b, k, 2) if n > 1 else ("gr", b, k)
            return QUnitary(op, nxt, 1)
        if tag == "gy":
            _, b, k, i = state
            op = v_gad[i] if gadget_bit(symbol) else identity
            nxt = ("gy", b, k, i + 1) if i < n else ("gr", b, k)
            return QUnitary(op, nxt, 1)
        if tag == "gr":
            _, b, k = state
            return QUnitary(identity, ("gly", b, k), -1)
        if tag == "gly":
            _, b, k = state
            if symbol == "#":
                return QUnitary(identity, ("gls", b, k), -1)
            return QUnitary(identity, ("gly", b, k), -1)
        if tag == "gls":
            _, b, k = state
            if symbol == "#":
                return QUnitary(identity, ("gls", b, k), -1)
            op = u_gad[n] if gadget_bit(symbol) else identity
            nxt = ("gux", b, k, n - 1) if n > 1 else ("ge", b, k)
            return QUnitary(op, nxt, -1)
        if tag == "gux":
            _, b, k, c = state
            op = u_gad[c] if gadget_bit(symbol) else identity
            nxt = ("gux", b, k, c - 1) if c > 1 else ("ge", b, k)
            return QUnitary(op, nxt, -1)
        if tag == "ge":
            _, b, k = state
            op = mid_ops[(b, k)]
            if k < blocks[b].oracle_calls:
                return QUnitary(op, ("gx", b, k + 1, 1), 1)
            if isinstance(blocks[b].terminal, FinalMeasure):
                return QUnitary(op, ("fmeas", b), 0)
            return QUnitary(op, ("meas", b), 0)
        if tag == "meas":
            b = state[1]
            branches = {0: (("vswap0", b), 1)}
            branches.update({i: (("vswap", b, i), 1) for i in range(1, n + 1)})
            return QMeasure(index_meas, branches)
        if tag == "fmeas":
            b = state[1]
            return QMeasure(final_meas[b], {0: (REJECT, 0), 1: (ACCEPT, 0)})
        if tag == "vswap":
            _, b, i = state
            if i == 1:
                return QUnitary(swap_ops[1], ("vy", b, 2 * n - 1, symbol == "1"), 1)
            return QUnitary(swap_ops[i], ("ver", b, i - 1), 1)
        if tag == "vswap0":
            b = state[1]
            return QUnitary(swap_ops[0], ("vy", b, 2 * n - 1, False), 1)
        if tag == "ver":
            _, b, c = state
            if c > 1:
                return QUnitary(identity, ("ver", b, c - 1), 1)
            return QUnitary(identity, ("vy", b, 2 * n - 1, symbol == "1"), 1)
        if tag == "vy":
            _, b, d, flag = state
            if d > 1:
                return QUnitary(identity, ("vy", b, d - 1, flag), 1)
            return QUnitary(identity, ("vyr", b, flag), 1)
        if tag == "vyr":
            _, b, flag = state
            if flag and symbol == "1":
                return QUnitary(identity, ACCEPT, 0)
            return QUnitary(identity, ("wrf", b), 1)
        if tag == "wrf":
            b = state[1]
            if symbol == RM:
                return QUnitary(identity, ("wlf", b), -1)
            return QUnitary(identity, ("wrf", b), 1)
        if tag == "wlf":
            b = state[1]
            if symbol != LM:
                return QUnitary(identity, ("wlf", b), -1)
            if b == last:
                return QUnitary(identity, REJECT, 0)
            return QUnitary(entry_ops[b + 1], after_entry(b + 1), 1)
        raise MachineError(f"unknown state {state!r}")

    classical = _and_state_count(p)
    t_total = p.query_count
    machine = MachineSpec(
        kind="quantum-classical",
        classical_state_count=classical,
        quantum_dim=dim,
        initial_classical=("form", 0),
        transition=transition,
        accepting=frozenset([ACCEPT]),
        rejecting=frozenset([REJECT]),
        initial_quantum=StateVector.basis(dim, 0),
        query_count=t_total,
        builder=(p.builder[0] + "_and", p.builder[1]) if p.builder else None,
    )
    return CompiledMachine(
        machine=machine,
        provenance={"compiler": "and-oracle", "n": n, "m": m, "queries": t_total,
                    "blocks": [b.oracle_calls for b in blocks],
                    "program": p.builder[0] if p.builder else "anonymous"},
        predicted_steps=_and_step_bound(p),
        state_counts={"classical": classical, "quantum": dim,
                      "paper_style_classical": (n + 1) ** 2},
    )


def _and_step_bound(p: QueryProgram) -> int:
    n = p.n
    total = (3 * n + 2) + (3 * n + 1)        # fused form pass + rewind
    for block in p.blocks:
        t = block.oracle_calls
        if isinstance(block.terminal, FinalMeasure):
            if t == 0:
                total += 3 * n + 1           # sweep + measure at $
            else:
                total += t * (6 * n + 2) + 1  # gadget walks + final measure
        else:
            total += t * (6 * n + 2) + 1 + (6 * n + 2)   # walks, measure, verify
    return total


def _and_state_count(p: QueryProgram) -> int:
    n = p.n
    count = (3 * n + 2) + 1 + 2
    per_oracle = 3 * n + 3            # gx, gs, gy, gr, gly, gls, gux, ge
    for block in p.blocks:
        t = block.oracle_calls
        count += t * per_oracle
        if isinstance(block.terminal, FinalMeasure):
            count += 1
        else:
            # meas, vswap*, vswap0, ver, vy (two flags), vyr (two flags), wrf, wlf
            count += 1 + n + 1 + (n - 1) + 2 * (2 * n - 1) + 2 + 1 + 1
    return count


def and_gadget_walk(x: str, y: str, state: np.ndarray):
    """Run one oracle gadget walk on a query-space state; m = 1.

    Returns (state after the walk, max leaked amplitude on aux = 1). Uses
    the very same operator constructors as compile_and_oracle_program, in
    the same order the head applies them: x forward, y forward, x backward.
    """
    n = len(x)
    if len(y) != n:
        raise ValueError("length mismatch")
    qdim = n + 1
    dim = 2 * qdim + 1

    def emb(i, aux):
        return 1 + 2 * i + aux

    u_gad = {i: _swap_blocks_op(dim, [emb(i, 0)], [emb(i, 1)]) for i in range(1, n + 1)}
    v_gad = {i: _phase_op(dim, [emb(i, 1)]) for i in range(1, n + 1)}
    amps = np.zeros(dim, dtype=np.complex128)
    amps[1::2] = state
    for i in range(1, n + 1):
        if x[i - 1] == "1":
            amps = u_gad[i].apply_raw(amps)
    for i in range(1, n + 1):
        if y[i - 1] == "1":
            amps = v_gad[i].apply_raw(amps)
    for i in range(n, 0, -1):
        if x[i - 1] == "1":
            amps = u_gad[i].apply_raw(amps)
    leak = float(np.max(np.abs(amps[2::2]))) if n >= 1 else 0.0
    return amps[1::2].copy(), leak


def _primes_for(n: int, prime_range: str) -> list[int]:
    if prime_range == "le-n2":
        return list(sympy.primerange(2, n * n + 1))
    if prime_range == "open-interval":
        return list(sympy.primerange(3, n * n))
    raise MachineError(f"unknown prime_range {prime_range!r}")


def build_eq_fingerprint_2pfa(n: int, prime_range: str = "le-n2",
                              exact_arithmetic: bool = False) -> CompiledMachine:
    """Probabilistic equality recognizer over ^x #^n y$ tapes.

    One left-to-right sweep: branch uniformly over primes at the left
    marker, stream x into a running residue of its binary value (most
    significant bit first), idle across the separator block, stream y the
    same way, and accept at the right marker iff the residues agree. Shape
    violations (including overlong inputs) reject inside the same sweep, in
    linear time. Equal pairs are accepted with probability 1; unequal pairs
    only on primes dividing the difference of the two values.

    With exact_arithmetic the branch weights are rationals and the engine
    returns exact acceptance probabilities.
    """
    if n < 2:
        raise MachineError("need n >= 2")
    primes = _primes_for(n, prime_range)
    count = len(primes)
    weight = Fraction(1, count) if exact_arithmetic else 1.0 / count
    branch = Branch(tuple((weight, ("x", p, 0, 1), 1) for p in primes))

    def transition(state, symbol):
        tag = state[0]
        if tag == "s0":
            return branch
        if tag == "x":
            _, p, s, i = state
            if symbol not in ("0", "1"):
                return Step(REJECT, 0)
            s2 = (2 * s + (symbol == "1")) % p
            if i < n:
                return Step(("x", p, s2, i + 1), 1)
            return Step(("h", p, s2, 1), 1)
        if tag == "h":
            _, p, s, j = state
            if symbol != "#":
                return Step(REJECT, 0)
            if j < n:
                return Step(("h", p, s, j + 1), 1)
            return Step(("y", p, s, 0, 1), 1)
        if tag == "y":
            _, p, s, t, k = state
            if symbol not in ("0", "1"):
                return Step(REJECT, 0)
            t2 = (2 * t + (symbol == "1")) % p
            if k < n:
                return Step(("y", p, s, t2, k + 1), 1)
            return Step(("fin", p, s, t2), 1)
        if tag == "fin":
            _, p, s, t = state
            if symbol == RM and s == t:
                return Step(ACCEPT, 0)
            return Step(REJECT, 0)
        raise MachineError(f"unknown state {state!r}")

    reachable = 3  # start, accept, reject
    for p in primes:
        x_states = sum(min(2 ** (i - 1), p) for i in range(1, n + 1))
        r = min(2 ** n, p)   # residues a full scan can actually reach
        reachable += x_states + n * r + r * x_states + r * r
    machine = MachineSpec(
        kind="probabilistic",
        classical_state_count=reachable,
        quantum_dim=0,
        initial_classical=("s0",),
        transition=transition,
        accepting=frozenset([ACCEPT]),
        rejecting=frozenset([REJECT]),
        builder=("eq_fingerprint", {"n": n, "prime_range": prime_range,
                                    "exact_arithmetic": exact_arithmetic}),
    )
    return CompiledMachine(
        machine=machine,
        provenance={"builder": "eq_fingerprint", "n": n, "prime_range": prime_range,
                    "primes": count},
        predicted_steps=3 * n + 2,
        state_counts={"classical": reachable, "quantum": 0,
                      "paper_style_classical": (n * n + 1) ** 3},
    )


def bad_prime_ratio(x: str, y: str, prime_range: str = "le-n2") -> Fraction:
    """Exact acceptance probability of the fingerprint machine on x != y.

    A prime is bad iff it divides |value(x) - value(y)|; equal strings make
    every prime bad (probability 1).
    """
    n = len(x)
    primes = _primes_for(n, prime_range)
    diff = abs(int(x, 2) - int(y, 2))
    if diff == 0:
        return Fraction(1)
    bad = sum(1 for p in primes if diff % p == 0)
    return Fraction(bad, len(primes))


def build_form_checker(n: int, shape: str = "pair") -> MachineSpec:
    """Deterministic single-pass acceptor for ^x #^n y$ ("pair") or ^x$ ("plain")."""
    if n < 1:
        raise MachineError("need n >= 1")
    if shape not in ("pair", "plain"):
        raise MachineError(f"unknown shape {shape!r}")
    length = 3 * n if shape == "pair" else n

    def expected(i: int) -> tuple:
        if shape == "pair" and n < i <= 2 * n:
            return ("#",)
        return ("0", "1")

    def transition(state, symbol):
        i = state[1]
        if i == 0:
            return Step(("form", 1), 1)
        if i <= length:
            if symbol in expected(i):
                return Step(("form", i + 1), 1)
            return Step(REJECT, 0)
        if symbol == RM:
            return Step(ACCEPT, 0)
        return Step(REJECT, 0)

    return MachineSpec(
        kind="deterministic",
        classical_state_count=length + 4,
        quantum_dim=0,
        initial_classical=("form", 0),
        transition=transition,
        accepting=frozenset([ACCEPT]),
        rejecting=frozenset([REJECT]),
        builder=("form_checker", {"n": n, "shape": shape}),
    )


def predicted_step_bound(c: CompiledMachine, tape_len: int) -> int:
    """Closed-form worst-case step bound for a compiled machine's tape length."""
    prov = c.provenance
    if "builder" in prov and prov["builder"] == "eq_fingerprint":
        expected = 3 * prov["n"] + 2
        if tape_len != expected:
            raise MachineError(f"fingerprint machine expects tape length {expected}")
        return c.predicted_steps
    if prov.get("compiler") == "query":
        if tape_len != prov["n"] + 2:
            raise MachineError(f"compiled machine expects tape length {prov['n'] + 2}")
        return c.predicted_steps
    if prov.get("compiler") == "and-oracle":
        if tape_len != 3 * prov["n"] + 2:
            raise MachineError(f"pair machine expects tape length {3 * prov['n'] + 2}")
        return c.predicted_steps
    raise MachineError(f"unknown provenance {prov!r}")


def build_grover_machine(n: int, repeats: int = 3) -> CompiledMachine:
    """Convenience: the intersection recognizer (search program, AND-compiled)."""
    return compile_and_oracle_program(grover_program(n, repeats=repeats))


def build_parity2_machine() -> CompiledMachine:
    return compile_query_program(parity2_program())


def build_parity2_and_machine() -> CompiledMachine:
    return compile_and_oracle_program(parity2_program())


def _register():
    serialization.register_builder(
        "eq_fingerprint",
        lambda n, prime_range="le-n2", exact_arithmetic=False:
            build_eq_fingerprint_2pfa(n, prime_range, exact_arithmetic))
    serialization.register_builder(
        "form_checker", lambda n, shape="pair": build_form_checker(n, shape))
    serialization.register_builder(
        "grover_compiled",
        lambda n, schedule=None, repeats=3:
            compile_query_program(grover_program(n, schedule, repeats)))
    serialization.register_builder(
        "grover_and",
        lambda n, schedule=None, repeats=3:
            compile_and_oracle_program(grover_program(n, schedule, repeats)))
    serialization.register_builder(
        "parity2_compiled", lambda: build_parity2_machine())
    serialization.register_builder(
        "parity2_and", lambda: build_parity2_and_machine())


_register()
