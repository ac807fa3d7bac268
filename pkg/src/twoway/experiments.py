"""Benchmark sweeps: build machines, run inputs, tabulate time/space/error.

Each experiment runs over a list of sizes and yields one row per size with
the worst-case model time T, the space in bits S, their product, the worst
observed error against the reference predicate, and crossing-protocol costs.
Model step counts are authoritative; wall time is measured for convenience
but deterministic output (byte-identical documents for equal spec and seed)
holds for every column except wall_time.

Input sets follow a fixed policy: exhaustive enumeration while the pair
space is small, otherwise all single-1-bit members plus a seeded random
sample, which covers the sparse-intersection worst cases of the search
machine.
"""

from __future__ import annotations

import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .comm import simulate_crossing_protocol
from .compilers import (
    and_gadget_walk,
    build_eq_fingerprint_2pfa,
    build_grover_machine,
    compile_query_program,
)
from .langs import encode_pair, eq_predicate, int_predicate
from .machines import MachineError, run_machine, run_probabilistic_exact, run_qcfa_exact, space_bits
from .querymodel import oracle_matrix, run_query_program, space_dim
from .querymodel import FinalMeasure, QueryBlock, QueryProgram

EXPERIMENTS = ("eq-tradeoff", "int-tradeoff", "comm-eq", "comm-int",
               "compiler-check", "gadget-check")


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    ns: tuple
    seed: int = 0
    mode: str = "exact"            # exact | monte-carlo
    trials: int = 10_000
    step_cap: int | None = None
    prime_range: str = "le-n2"
    sample_pairs: int = 64
    programs_per_n: int = 10       # compiler-check only

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise MachineError(f"unknown experiment {self.experiment!r}")
        if not self.ns:
            raise MachineError("need at least one n")
        if any(n < 2 for n in self.ns):
            raise MachineError("n values must be >= 2")
        if self.mode not in ("exact", "monte-carlo"):
            raise MachineError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class SweepRow:
    n: int
    T_max: int
    T_expected: float
    S_bits: float
    TS: float
    worst_error: float
    comm_bits: int
    comm_qubits: int
    wall_time: float

    def as_record(self) -> dict:
        return {
            "n": self.n,
            "T_max": self.T_max,
            "T_expected": self.T_expected,
            "S_bits": self.S_bits,
            "TS": self.TS,
            "worst_error": self.worst_error,
            "comm_bits": self.comm_bits,
            "comm_qubits": self.comm_qubits,
            "wall_time": self.wall_time,
        }


COLUMNS = ("n", "T_max", "T_expected", "S_bits", "TS", "worst_error",
           "comm_bits", "comm_qubits", "wall_time")


def _bitstring(n: int, value: int) -> str:
    return format(value, f"0{n}b")


def _pair_inputs(n: int, rng, sample_pairs: int, members_of, exhaustive: bool):
    """All pairs when exhaustive, else single-1-bit members plus samples."""
    if exhaustive:
        for xv in range(2 ** n):
            for yv in range(2 ** n):
                yield _bitstring(n, xv), _bitstring(n, yv)
        return
    for i in range(n):
        one = "".join("1" if k == i else "0" for k in range(n))
        yield from members_of(one)
    for _ in range(sample_pairs):
        xv = int(rng.integers(0, 2 ** n))
        yv = int(rng.integers(0, 2 ** n))
        yield _bitstring(n, xv), _bitstring(n, yv)


def _run(machine, tape, spec: ExperimentSpec, seed: int):
    return run_machine(machine, tape, mode=spec.mode, step_cap=spec.step_cap,
                       trials=spec.trials, seed=seed)


def _tradeoff_row(spec: ExperimentSpec, n: int, compiled, truth, members_of,
                  exhaustive: bool) -> SweepRow:
    start = time.perf_counter()
    rng = np.random.default_rng(spec.seed + n)
    machine = compiled.machine
    t_max = 0
    t_expected = 0.0
    worst_error = 0.0
    comm_inputs = {}
    pairs = _pair_inputs(n, rng, spec.sample_pairs, members_of, exhaustive)
    for idx, (x, y) in enumerate(pairs):
        res = _run(machine, encode_pair(x, y), spec, seed=spec.seed + idx)
        t_max = max(t_max, res.steps_max)
        t_expected = max(t_expected, float(res.steps_expected))
        err = abs(float(res.accept_prob) - truth(x, y))
        worst_error = max(worst_error, err)
        key = truth(x, y)
        if key not in comm_inputs:
            comm_inputs[key] = (x, y)
    comm_bits = comm_qubits = 0
    for x, y in comm_inputs.values():
        t = simulate_crossing_protocol(compiled, x, y, step_cap=spec.step_cap)
        comm_bits = max(comm_bits, t.total_bits)
        comm_qubits = max(comm_qubits, t.total_qubits)
    s_bits = space_bits(machine)
    return SweepRow(n=n, T_max=t_max, T_expected=t_expected, S_bits=s_bits,
                    TS=t_max * s_bits, worst_error=worst_error,
                    comm_bits=comm_bits, comm_qubits=comm_qubits,
                    wall_time=time.perf_counter() - start)


def _eq_row(spec: ExperimentSpec, n: int) -> SweepRow:
    compiled = build_eq_fingerprint_2pfa(n, prime_range=spec.prime_range)

    def members_of(one):
        yield one, one
        flipped = ("1" if one[0] == "0" else "0") + one[1:]
        yield one, flipped
    return _tradeoff_row(spec, n, compiled,
                         lambda x, y: float(eq_predicate(x, y)), members_of,
                         exhaustive=4 ** n <= 65536)


def _int_row(spec: ExperimentSpec, n: int) -> SweepRow:
    compiled = build_grover_machine(n)

    def truth(x, y):
        # one-sided recognizer: members must clear 2/3, non-members sit at 0
        if int_predicate(x, y):
            return 1.0
        return 0.0

    def members_of(one):
        yield one, one                       # single shared 1-bit
        yield one, "1" * n                   # same bit against all-ones
        inverted = "".join("0" if c == "1" else "1" for c in one)
        yield one, inverted                  # empty intersection
    # the quantum engine is heavier per input, so exhaustion stops earlier
    return _tradeoff_row(spec, n, compiled, truth, members_of,
                         exhaustive=4 ** n <= 256)


def _comm_row(spec: ExperimentSpec, n: int, compiled, sample_member, sample_other) -> SweepRow:
    start = time.perf_counter()
    machine = compiled.machine
    t_max = 0
    t_expected = 0.0
    comm_bits = comm_qubits = 0
    worst_error = 0.0
    for x, y in (sample_member, sample_other):
        t = simulate_crossing_protocol(compiled, x, y, step_cap=spec.step_cap)
        comm_bits = max(comm_bits, t.total_bits)
        comm_qubits = max(comm_qubits, t.total_qubits)
        t_max = max(t_max, t.output.steps_max)
        t_expected = max(t_expected, float(t.output.steps_expected))
    s_bits = space_bits(machine)
    return SweepRow(n=n, T_max=t_max, T_expected=t_expected, S_bits=s_bits,
                    TS=t_max * s_bits, worst_error=worst_error,
                    comm_bits=comm_bits, comm_qubits=comm_qubits,
                    wall_time=time.perf_counter() - start)


def _compiler_check_row(spec: ExperimentSpec, n: int) -> SweepRow:
    start = time.perf_counter()
    rng = np.random.default_rng(spec.seed + n)
    worst = 0.0
    t_max = 0
    t_expected = 0.0
    s_bits = 0.0
    for _ in range(spec.programs_per_n):
        m = int(rng.integers(1, 4))
        t = int(rng.integers(0, 5))
        program = _random_straight_line(rng, n, m, t)
        compiled = compile_query_program(program)
        s_bits = max(s_bits, space_bits(compiled.machine))
        for v in range(2 ** n):
            x = _bitstring(n, v)
            machine_res = run_qcfa_exact(compiled.machine, "^" + x + "$",
                                         step_cap=spec.step_cap)
            query_res = run_query_program(program, x)
            worst = max(worst, abs(float(machine_res.accept_prob) - query_res.accept_prob))
            t_max = max(t_max, machine_res.steps_max)
            t_expected = max(t_expected, float(machine_res.steps_expected))
    return SweepRow(n=n, T_max=t_max, T_expected=t_expected, S_bits=s_bits,
                    TS=t_max * s_bits, worst_error=worst, comm_bits=0,
                    comm_qubits=0, wall_time=time.perf_counter() - start)


def _gadget_check_row(spec: ExperimentSpec, n: int) -> SweepRow:
    start = time.perf_counter()
    rng = np.random.default_rng(spec.seed + n)
    worst = 0.0
    for xv in range(2 ** n):
        for yv in range(2 ** n):
            x, y = _bitstring(n, xv), _bitstring(n, yv)
            z = _bitstring(n, xv & yv)
            for _ in range(3):
                state = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
                state /= np.linalg.norm(state)
                walked, leak = and_gadget_walk(x, y, state)
                direct = oracle_matrix(z).apply_raw(state)
                worst = max(worst, float(np.max(np.abs(walked - direct))), leak)
    compiled = build_grover_machine(n, repeats=1)
    res = run_qcfa_exact(compiled.machine, encode_pair("0" * n, "0" * n),
                         step_cap=spec.step_cap)
    s_bits = space_bits(compiled.machine)
    return SweepRow(n=n, T_max=res.steps_max, T_expected=float(res.steps_expected),
                    S_bits=s_bits, TS=res.steps_max * s_bits, worst_error=worst,
                    comm_bits=0, comm_qubits=0,
                    wall_time=time.perf_counter() - start)


def _random_straight_line(rng, n, m, t) -> QueryProgram:
    dim = space_dim(n, m)
    unitaries = []
    for _ in range(t + 1):
        z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        q, r = np.linalg.qr(z)
        unitaries.append(q * (np.diag(r) / np.abs(np.diag(r))))
    start = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    start /= np.linalg.norm(start)
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, _ = np.linalg.qr(z)
    rank = int(rng.integers(0, dim + 1))
    proj = q[:, :rank] @ q[:, :rank].conj().T
    return QueryProgram(n=n, m=m, start=start,
                        blocks=(QueryBlock(tuple(unitaries), FinalMeasure(proj)),))


def run_experiment(spec: ExperimentSpec) -> list[SweepRow]:
    """One SweepRow per n, ascending."""
    rows = []
    for n in sorted(spec.ns):
        if spec.experiment == "eq-tradeoff":
            rows.append(_eq_row(spec, n))
        elif spec.experiment == "int-tradeoff":
            rows.append(_int_row(spec, n))
        elif spec.experiment == "comm-eq":
            compiled = build_eq_fingerprint_2pfa(n, prime_range=spec.prime_range)
            rows.append(_comm_row(spec, n, compiled,
                                  ("0" * n, "0" * n),
                                  ("0" * n, "0" * (n - 1) + "1")))
        elif spec.experiment == "comm-int":
            compiled = build_grover_machine(n)
            one = "1" + "0" * (n - 1)
            rows.append(_comm_row(spec, n, compiled, (one, one), ("0" * n, "0" * n)))
        elif spec.experiment == "compiler-check":
            rows.append(_compiler_check_row(spec, n))
        else:
            rows.append(_gadget_check_row(spec, n))
    return rows


def _fmt(value) -> str:
    if isinstance(value, int):
        return str(value)
    return format(value, ".12g")


def emit(rows, fmt: str = "csv") -> str:
    """Render rows as a csv or json document with 12-significant-digit reals."""
    if not rows:
        raise MachineError("no rows to emit")
    if fmt == "csv":
        out = io.StringIO()
        out.write(",".join(COLUMNS) + "\n")
        for row in rows:
            record = row.as_record()
            out.write(",".join(_fmt(record[c]) for c in COLUMNS) + "\n")
        return out.getvalue()
    if fmt == "json":
        payload = [{c: row.as_record()[c] for c in COLUMNS} for row in rows]
        return json.dumps(payload, indent=2)
    raise MachineError(f"unknown output format {fmt!r}")


def rows_from_records(records) -> list[SweepRow]:
    return [SweepRow(**{
        "n": int(r["n"]), "T_max": int(r["T_max"]),
        "T_expected": float(r["T_expected"]), "S_bits": float(r["S_bits"]),
        "TS": float(r["TS"]), "worst_error": float(r["worst_error"]),
        "comm_bits": int(r["comm_bits"]), "comm_qubits": int(r["comm_qubits"]),
        "wall_time": float(r["wall_time"]),
    }) for r in records]
