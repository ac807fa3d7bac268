"""Two-party crossing protocol: split the tape, run the machine, count messages.

The first party owns the left half (left marker plus x), the second party
the right half (y plus right marker); the separator block in the middle
belongs to whoever is currently simulating. A message fires exactly when the
head enters the other party's exclusive region, carrying the machine's
current classical state (and, for quantum-classical machines, the quantum
state, charged at the usual qubit count for transmitting a register of that
dimension --- the transcript merely accounts for it, the simulator itself
stays monolithic).

The protocol run is the plain engine run with bookkeeping attached: it never
alters acceptance probabilities or step counts. For probabilistic and
quantum machines in exact mode the transcript reports the worst-case branch
and the branch-mass-weighted expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .langs import SEPARATOR, encode_pair
from .machines import MachineError, MachineSpec, RunResult, run_with_regions, space_bits
from .serialization import resolve_machine

DIRECTIONS = ("a->b", "b->a")


@dataclass(frozen=True)
class RegionSplit:
    """Exclusive region bounds on a pair tape with one separator block."""

    alice_end: int
    bob_start: int
    block_width: int

    @staticmethod
    def from_tape(tape: str) -> "RegionSplit":
        first = tape.find(SEPARATOR)
        last = tape.rfind(SEPARATOR)
        if first < 0:
            raise MachineError("crossing protocol needs a separator block")
        if SEPARATOR * (last - first + 1) != tape[first:last + 1]:
            raise MachineError("separator cells must be contiguous")
        return RegionSplit(alice_end=first - 1, bob_start=last + 1,
                           block_width=last - first + 1)


@dataclass(frozen=True)
class CrossingMessage:
    direction: str
    step_index: int
    classical_bits: int
    qubits: int
    payload_state: str


@dataclass
class CommTranscript:
    """Messages of a worst-case branch plus exact crossing statistics."""

    messages: list = field(default_factory=list)
    crossings: int = 0
    expected_crossings: float = 0.0
    total_bits: int = 0
    total_qubits: int = 0
    expected_bits: float = 0.0
    rounds: int = 0
    block_width: int = 0
    mode: str = "exact"
    output: RunResult | None = None


def message_bits(m: MachineSpec) -> int:
    return max(1, math.ceil(math.log2(m.classical_state_count))) \
        if m.classical_state_count > 1 else 0


def message_qubits(m: MachineSpec) -> int:
    return math.ceil(math.log2(max(m.quantum_dim, 1)))


def simulate_crossing_protocol(machine, x: str, y: str, mode: str = "exact",
                               seed: int = 0, step_cap: int | None = None) -> CommTranscript:
    """Run the machine on the pair tape while recording boundary crossings.

    mode "exact" uses the kind-matching exact engine (worst-case and expected
    crossing counts over branches); mode "sample" follows one seeded
    trajectory.
    """
    m = resolve_machine(machine)
    tape = encode_pair(x, y)
    split = RegionSplit.from_tape(tape)
    result, stats = run_with_regions(m, tape, (split.alice_end, split.bob_start),
                                     mode=mode, step_cap=step_cap, seed=seed)
    bits = message_bits(m)
    qubits = message_qubits(m)
    messages = [
        CrossingMessage(direction=DIRECTIONS[direction], step_index=step,
                        classical_bits=bits, qubits=qubits,
                        payload_state=str(state))
        for step, direction, state in stats.messages
    ]
    alternations = sum(1 for a, b in zip(messages, messages[1:])
                       if a.direction != b.direction)
    return CommTranscript(
        messages=messages,
        crossings=stats.crossings_max,
        expected_crossings=float(stats.crossings_expected),
        total_bits=bits * stats.crossings_max,
        total_qubits=qubits * stats.crossings_max,
        expected_bits=bits * float(stats.crossings_expected),
        rounds=(alternations + 1) if messages else 0,
        block_width=split.block_width,
        mode=mode,
        output=result,
    )


def comm_cost_report(t: CommTranscript, machine) -> dict:
    """Totals plus the crossing bound check: crossings <= steps/width + 1."""
    m = resolve_machine(machine)
    if t.output is None:
        raise MachineError("transcript carries no run output")
    width = max(t.block_width, 1)
    crossing_bound = t.output.steps_max / width + 1
    bits_bound = message_bits(m) * crossing_bound
    return {
        "total_bits": t.total_bits,
        "total_qubits": t.total_qubits,
        "crossings": t.crossings,
        "expected_crossings": t.expected_crossings,
        "rounds": t.rounds,
        "steps_max": t.output.steps_max,
        "space_bits": space_bits(m),
        "crossing_bound": crossing_bound,
        "crossing_bound_holds": t.crossings <= crossing_bound,
        "bits_bound": bits_bound,
        "bits_bound_holds": t.total_bits <= bits_bound,
    }


def transcript_to_doc(t: CommTranscript) -> dict:
    return {
        "format": "twoway-transcript/1",
        "mode": t.mode,
        "block_width": t.block_width,
        "crossings": t.crossings,
        "expected_crossings": t.expected_crossings,
        "total_bits": t.total_bits,
        "total_qubits": t.total_qubits,
        "expected_bits": t.expected_bits,
        "rounds": t.rounds,
        "messages": [
            {"direction": msg.direction, "step": msg.step_index,
             "classical_bits": msg.classical_bits, "qubits": msg.qubits,
             "payload_state": msg.payload_state}
            for msg in t.messages
        ],
        "output": t.output.to_dict() if t.output is not None else None,
    }
