"""Two-way automata over marked tapes and the engines that run them.

A machine is a declared state space plus a transition rule (a callable, not
a materialized table, because the interesting machines here have
parameter-dependent state spaces). Three kinds are supported:

* deterministic      -- one (state, move) successor per step
* probabilistic      -- a finite distribution of successors per step
* quantum-classical  -- a constant-size quantum register driven by the
                        classical controller: each step applies a unitary or
                        a projective measurement whose outcome selects the
                        classical successor

The exact engines evolve the full configuration distribution (probabilistic)
or the measurement-outcome tree (quantum-classical) wave by wave, merging
identical configurations, so acceptance probabilities come out exact rather
than sampled. A seeded Monte Carlo engine cross-checks them.

Probability arithmetic follows the weight type supplied by the machine:
builders that hand out `fractions.Fraction` weights get exact rational
acceptance probabilities; float weights stay floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from . import qcore
from .langs import LEFT_MARKER, RIGHT_MARKER, is_bracketed
from .qcore import DEFAULT_TOL, ProjectiveMeasurement, StateVector, TolerancePolicy, UnitaryOp


class MachineError(Exception):
    """Malformed machine, undefined transition, or head out of range."""


# Transition actions. These are deliberately lightweight named tuples: the
# engines dispatch on their concrete type once per executed step.
class Step(NamedTuple):
    state: object
    move: int


class Branch(NamedTuple):
    # choices: tuple of (weight, state, move); weights sum to 1
    choices: tuple


class QUnitary(NamedTuple):
    op: UnitaryOp
    state: object
    move: int


class QMeasure(NamedTuple):
    measurement: ProjectiveMeasurement
    # branches: mapping outcome label -> (state, move)
    branches: dict


DETERMINISTIC = "deterministic"
PROBABILISTIC = "probabilistic"
QUANTUM_CLASSICAL = "quantum-classical"
KINDS = (DETERMINISTIC, PROBABILISTIC, QUANTUM_CLASSICAL)


@dataclass(frozen=True)
class MachineSpec:
    """A two-way automaton given by declared counts and a transition rule.

    `transition(state, symbol)` must be defined for every non-halting state
    and every symbol that can be scanned; it returns one of the action types
    above, matching `kind`. Accepting and rejecting state sets are disjoint
    and no transition is ever requested from them.
    """

    kind: str
    classical_state_count: int
    quantum_dim: int
    initial_classical: object
    transition: Callable[[object, str], object]
    accepting: frozenset
    rejecting: frozenset
    initial_quantum: StateVector | None = None
    query_count: int | None = None
    builder: tuple | None = None          # (name, params) provenance, if built
    table: dict | None = field(default=None, repr=False)  # explicit-table source
    tol: TolerancePolicy = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MachineError(f"unknown machine kind {self.kind!r}")
        if self.classical_state_count < 1:
            raise MachineError("classical_state_count must be positive")
        if self.accepting & self.rejecting:
            raise MachineError("accepting and rejecting state sets must be disjoint")
        if self.kind == QUANTUM_CLASSICAL:
            if self.quantum_dim < 1 or self.initial_quantum is None:
                raise MachineError("quantum-classical machines need quantum_dim and an initial state")
            if self.initial_quantum.dim != self.quantum_dim:
                raise MachineError("initial quantum state dimension mismatch")
        elif self.quantum_dim not in (0,):
            raise MachineError("classical machines must declare quantum_dim = 0")


@dataclass(frozen=True)
class RunResult:
    """Outcome of one run: halting masses plus time/space accounting.

    accept/reject/nonhalt sum to 1 (exactly for rational weights, within
    tol_prob for floats). steps_max is the worst halting step over branches
    (the step cap when mass was still live); steps_expected is the
    mass-weighted mean with capped mass contributing the cap itself.
    """

    accept_prob: object
    reject_prob: object
    nonhalt_prob: object
    steps_max: int
    steps_expected: object
    space_bits: float
    queries_used: int | None = None

    def to_dict(self) -> dict:
        return {
            "accept_prob": float(self.accept_prob),
            "reject_prob": float(self.reject_prob),
            "nonhalt_prob": float(self.nonhalt_prob),
            "steps_max": self.steps_max,
            "steps_expected": float(self.steps_expected),
            "space_bits": self.space_bits,
            "queries_used": self.queries_used,
        }


@dataclass
class CommStats:
    """Crossing bookkeeping collected when a run is given region bounds.

    `messages` is the crossing list of a worst-case branch: tuples of
    (step, direction, state) with direction 0 = first party to second party.
    """

    crossings_max: int = 0
    crossings_expected: object = 0.0
    messages: tuple = ()


# Region bounds: head positions <= alice_end are the first party's exclusive
# region, >= bob_start the second party's; the shared block in between
# belongs to whoever is currently simulating.
RegionBounds = tuple


def validate_tape(tape: str):
    if not is_bracketed(tape):
        raise MachineError(f"tape must be {LEFT_MARKER}...{RIGHT_MARKER} over 0/1/#: {tape!r}")


def space_bits(m: MachineSpec) -> float:
    """Space in bits: log2(classical states) + log2(max(quantum_dim, 1))."""
    return math.log2(m.classical_state_count) + math.log2(max(m.quantum_dim, 1))


def default_step_cap(m: MachineSpec, tape_len: int) -> int:
    if m.query_count is not None:
        return 50 * (tape_len + 1) * (1 + m.query_count)
    return 10 ** 6


def _get_action(m: MachineSpec, state, symbol):
    try:
        action = m.transition(state, symbol)
    except (KeyError, LookupError) as exc:
        raise MachineError(f"undefined transition for ({state!r}, {symbol!r})") from exc
    if action is None:
        raise MachineError(f"undefined transition for ({state!r}, {symbol!r})")
    return action


def _moved(head: int, move: int, tape_len: int) -> int:
    new = head + move
    if not (0 <= new < tape_len):
        raise MachineError(f"head moved off the tape: {head} -> {new}")
    return new


class _Crossing:
    """Per-run crossing helper shared by all engines."""

    def __init__(self, regions: RegionBounds):
        self.alice_end, self.bob_start = regions

    def update(self, owner: int, new_head: int, state, step: int, messages: tuple):
        """Returns (owner, messages) after a head move to new_head."""
        if owner == 0 and new_head >= self.bob_start:
            return 1, messages + ((step, 0, state),)
        if owner == 1 and new_head <= self.alice_end:
            return 0, messages + ((step, 1, state),)
        return owner, messages


def run_deterministic(m: MachineSpec, tape: str, step_cap: int | None = None,
                      regions: RegionBounds | None = None):
    """Follow the single trajectory until halt or cap.

    Returns a RunResult (and, when regions are given, attaches nothing extra:
    use run_with_regions for transcripts).
    """
    result, _ = _run_deterministic(m, tape, step_cap, regions)
    return result


def _run_deterministic(m, tape, step_cap, regions):
    if m.kind != DETERMINISTIC:
        raise MachineError(f"run_deterministic needs a deterministic machine, got {m.kind}")
    validate_tape(tape)
    cap = step_cap if step_cap is not None else default_step_cap(m, len(tape))
    crossing = _Crossing(regions) if regions is not None else None
    state, head, steps = m.initial_classical, 0, 0
    owner, messages = 0, ()
    sb = space_bits(m)
    while state not in m.accepting and state not in m.rejecting:
        if steps >= cap:
            result = RunResult(0.0, 0.0, 1.0, cap, float(cap), sb, m.query_count)
            return result, CommStats(len(messages), float(len(messages)), messages)
        action = _get_action(m, state, tape[head])
        if type(action) is not Step:
            raise MachineError("deterministic machine returned a non-deterministic action")
        steps += 1
        head = _moved(head, action.move, len(tape))
        state = action.state
        if crossing is not None:
            owner, messages = crossing.update(owner, head, state, steps, messages)
    accept = 1.0 if state in m.accepting else 0.0
    result = RunResult(accept, 1.0 - accept, 0.0, steps, float(steps), sb, m.query_count)
    return result, CommStats(len(messages), float(len(messages)), messages)


class _Rec:
    """Live configuration record for the exact engines.

    `messages` is the crossing list of the record's worst constituent branch;
    `csum` is the mass-weighted crossing count over all merged constituents,
    so expectations stay exact across merges.
    """

    __slots__ = ("mass", "amps", "owner", "messages", "csum")

    def __init__(self, mass, amps=None, owner=0, messages=(), csum=0):
        self.mass = mass
        self.amps = amps
        self.owner = owner
        self.messages = messages
        self.csum = csum


class _HaltAcc:
    """Accumulates halting mass with step and crossing statistics."""

    def __init__(self):
        self.accept = 0
        self.reject = 0
        self.nonhalt = 0
        self.steps_mass = 0
        self.steps_max = 0
        self.cross_mass = 0
        self.cross_max = 0
        self.cross_msgs = ()

    def halt(self, accepted: bool, mass, step: int, messages, csum):
        if accepted:
            self.accept = self.accept + mass
        else:
            self.reject = self.reject + mass
        self.steps_mass = self.steps_mass + mass * step
        if step > self.steps_max:
            self.steps_max = step
        self.cross_mass = self.cross_mass + csum
        if len(messages) > self.cross_max:
            self.cross_max, self.cross_msgs = len(messages), messages


def _merge_rec(new: dict, key, mass, owner, messages, csum, amps=None):
    rec = new.get(key)
    if rec is None:
        new[key] = _Rec(mass, amps, owner, messages, csum)
        return
    if rec.owner != owner:
        raise MachineError("configurations with distinct protocol owners merged")
    rec.mass = rec.mass + mass
    rec.csum = rec.csum + csum
    if len(messages) > len(rec.messages):
        rec.messages = messages


def _finish(m, acc: _HaltAcc, live_mass, cap, exact):
    nonhalt = acc.nonhalt + live_mass
    total = acc.accept + acc.reject + nonhalt
    if exact:
        if total != 1:
            raise MachineError(f"mass not conserved: total {total}")
    elif abs(float(total) - 1.0) > m.tol.tol_prob:
        raise MachineError(f"mass not conserved: total {float(total)}")
    steps_expected = acc.steps_mass + nonhalt * cap
    steps_max = cap if (float(nonhalt) > m.tol.tol_prob) else acc.steps_max
    if not exact:
        accept = qcore.clamp_probability(float(acc.accept), m.tol)
        reject = qcore.clamp_probability(float(acc.reject), m.tol)
        nonhalt = qcore.clamp_probability(float(nonhalt), m.tol)
    else:
        accept, reject = acc.accept, acc.reject
    result = RunResult(accept, reject, nonhalt, steps_max, steps_expected,
                       space_bits(m), m.query_count)
    stats = CommStats(acc.cross_max, acc.cross_mass, acc.cross_msgs)
    return result, stats


def run_probabilistic_exact(m: MachineSpec, tape: str, step_cap: int | None = None,
                            regions: RegionBounds | None = None) -> RunResult:
    """Evolve the full distribution over (state, head) configurations.

    Identical configurations merge, so machines whose branches walk in
    lockstep cost one record per branch per step. Mass is conserved at every
    wave (exactly for Fraction weights, within tol_prob for floats).
    """
    result, _ = _run_probabilistic(m, tape, step_cap, regions)
    return result


def _run_probabilistic(m, tape, step_cap, regions):
    if m.kind != PROBABILISTIC:
        raise MachineError(f"run_probabilistic_exact needs a probabilistic machine, got {m.kind}")
    validate_tape(tape)
    cap = step_cap if step_cap is not None else default_step_cap(m, len(tape))
    crossing = _Crossing(regions) if regions is not None else None
    tape_len = len(tape)
    acc = _HaltAcc()
    live = {(m.initial_classical, 0): _Rec(1)}
    if m.initial_classical in m.accepting or m.initial_classical in m.rejecting:
        rec = live.pop((m.initial_classical, 0))
        acc.halt(m.initial_classical in m.accepting, rec.mass, 0, (), 0)
    exact = True
    accepting, rejecting = m.accepting, m.rejecting
    trans = m.transition
    halting = accepting | rejecting
    wave = 0
    while live and wave < cap:
        wave += 1
        new = {}
        for (state, head), rec in live.items():
            symbol = tape[head]
            try:
                action = trans(state, symbol)
            except (KeyError, LookupError) as exc:
                raise MachineError(f"undefined transition for ({state!r}, {symbol!r})") from exc
            if type(action) is Step:
                # prob-1 move: the record flows through unchanged
                nstate, move = action
                nhead = head + move
                if nhead < 0 or nhead >= tape_len:
                    raise MachineError(f"head moved off the tape: {head} -> {nhead}")
                if crossing is not None:
                    owner, messages = crossing.update(rec.owner, nhead, nstate, wave,
                                                      rec.messages)
                    if owner != rec.owner:
                        rec.csum = rec.csum + rec.mass
                    rec.owner, rec.messages = owner, messages
                if nstate in halting:
                    acc.halt(nstate in accepting, rec.mass, wave, rec.messages, rec.csum)
                    continue
                key = (nstate, nhead)
                other = new.get(key)
                if other is None:
                    new[key] = rec
                else:
                    if other.owner != rec.owner:
                        raise MachineError("configurations with distinct protocol owners merged")
                    other.mass = other.mass + rec.mass
                    other.csum = other.csum + rec.csum
                    if len(rec.messages) > len(other.messages):
                        other.messages = rec.messages
                continue
            if action is None:
                raise MachineError(f"undefined transition for ({state!r}, {symbol!r})")
            if type(action) is not Branch:
                raise MachineError("probabilistic machine returned a quantum action")
            choices = action.choices
            total_w = sum(c[0] for c in choices)
            if isinstance(total_w, float):
                exact = False
                if abs(total_w - 1.0) > m.tol.tol_prob:
                    raise MachineError(f"branch weights sum to {total_w}, not 1")
            elif total_w != 1:
                raise MachineError(f"branch weights sum to {total_w}, not 1")
            for weight, nstate, move in choices:
                mass = rec.mass * weight
                if isinstance(mass, float):
                    exact = False
                if not mass:
                    continue
                nhead = _moved(head, move, tape_len)
                owner, messages, csum = rec.owner, rec.messages, rec.csum * weight
                if crossing is not None:
                    owner, messages = crossing.update(owner, nhead, nstate, wave, messages)
                    if owner != rec.owner:
                        csum = csum + mass
                if nstate in halting:
                    acc.halt(nstate in accepting, mass, wave, messages, csum)
                else:
                    _merge_rec(new, (nstate, nhead), mass, owner, messages, csum)
        live = new
    live_mass = sum(rec.mass for rec in live.values())
    return _finish(m, acc, live_mass, cap, exact)


def run_qcfa_exact(m: MachineSpec, tape: str, step_cap: int | None = None,
                   prune_eps: float = 1e-12,
                   regions: RegionBounds | None = None) -> RunResult:
    """Explore the measurement-outcome tree of a quantum-classical machine.

    Each branch carries its own quantum state; measurement outcomes split
    branches with renormalized post states; branches whose probability drops
    below prune_eps are dropped into the nonhalting mass. Branches that reach
    bit-identical (classical, head, amplitudes) configurations in the same
    wave merge, which keeps width bounded for machines that re-prepare a
    fixed state between rounds.
    """
    result, _ = _run_qcfa(m, tape, step_cap, prune_eps, regions)
    return result


def _canonical_key(state, head, amps):
    # +0.0 folds negative zeros so sign-flipped zero amplitudes still merge
    return state, head, (amps + 0.0).tobytes()


def _run_qcfa(m, tape, step_cap, prune_eps, regions):
    if m.kind != QUANTUM_CLASSICAL:
        raise MachineError(f"run_qcfa_exact needs a quantum-classical machine, got {m.kind}")
    validate_tape(tape)
    cap = step_cap if step_cap is not None else default_step_cap(m, len(tape))
    crossing = _Crossing(regions) if regions is not None else None
    tape_len = len(tape)
    acc = _HaltAcc()
    amps0 = m.initial_quantum.amps.copy()
    live = {_canonical_key(m.initial_classical, 0, amps0): _Rec(1.0, amps0)}
    accepting, rejecting = m.accepting, m.rejecting
    wave = 0
    while live and wave < cap:
        wave += 1
        new = {}
        for (state, head, _), rec in live.items():
            action = _get_action(m, state, tape[head])
            kind = type(action)
            if kind is QUnitary:
                op = action.op
                if op.dim != rec.amps.size:
                    raise MachineError("unitary dimension does not match quantum register")
                amps = rec.amps if op.is_identity else op.apply_raw(rec.amps)
                branches = ((rec.mass, amps, action.state, action.move),)
            elif kind is Step:
                branches = ((rec.mass, rec.amps, action.state, action.move),)
            elif kind is QMeasure:
                meas = action.measurement
                if meas.dim != rec.amps.size:
                    raise MachineError("measurement dimension does not match quantum register")
                branches = []
                for label, proj in zip(meas.outcome_labels, meas.projectors):
                    projected = proj @ rec.amps
                    p = float(np.vdot(projected, projected).real)
                    if p <= 0.0:
                        continue
                    mass = rec.mass * p
                    if mass < prune_eps:
                        acc.nonhalt += mass
                        continue
                    if label not in action.branches:
                        raise MachineError(f"measurement outcome {label!r} has no classical branch")
                    nstate, move = action.branches[label]
                    branches.append((mass, projected / math.sqrt(p), nstate, move))
            else:
                raise MachineError("quantum-classical machine returned an invalid action")
            for mass, amps, nstate, move in branches:
                nhead = _moved(head, move, tape_len)
                frac = mass / rec.mass if rec.mass else 0.0
                owner, messages, csum = rec.owner, rec.messages, rec.csum * frac
                if crossing is not None:
                    owner, messages = crossing.update(owner, nhead, nstate, wave, messages)
                    if owner != rec.owner:
                        csum = csum + mass
                if nstate in accepting or nstate in rejecting:
                    acc.halt(nstate in accepting, mass, wave, messages, csum)
                else:
                    _merge_rec(new, _canonical_key(nstate, nhead, amps), mass,
                               owner, messages, csum, amps)
        live = new
        conserved = acc.accept + acc.reject + acc.nonhalt + sum(r.mass for r in live.values())
        if abs(conserved - 1.0) > m.tol.tol_prob:
            raise MachineError(f"mass not conserved at wave {wave}: {conserved}")
    live_mass = sum(rec.mass for rec in live.values())
    return _finish(m, acc, live_mass, cap, exact=False)


def _sample_trajectory(m, tape, cap, rng, crossing):
    """One sampled run: returns (outcome, steps, messages).

    outcome is "accept" / "reject" / "nonhalt".
    """
    tape_len = len(tape)
    state, head, steps = m.initial_classical, 0, 0
    amps = m.initial_quantum.amps.copy() if m.initial_quantum is not None else None
    owner, messages = 0, ()
    while state not in m.accepting and state not in m.rejecting:
        if steps >= cap:
            return "nonhalt", cap, messages
        action = _get_action(m, state, tape[head])
        kind = type(action)
        if kind is Step:
            nstate, move = action.state, action.move
        elif kind is Branch:
            r = rng.random()
            cum = 0.0
            nstate, move = action.choices[-1][1], action.choices[-1][2]
            for weight, cstate, cmove in action.choices:
                cum += float(weight)
                if r < cum:
                    nstate, move = cstate, cmove
                    break
        elif kind is QUnitary:
            if not action.op.is_identity:
                amps = action.op.apply_raw(amps)
            nstate, move = action.state, action.move
        elif kind is QMeasure:
            meas = action.measurement
            probs = meas.outcome_probs(amps)
            total = sum(probs)
            r = rng.random() * total
            cum = 0.0
            pick = len(probs) - 1
            for idx, p in enumerate(probs):
                cum += p
                if r < cum:
                    pick = idx
                    break
            label = meas.outcome_labels[pick]
            projected = meas.projectors[pick] @ amps
            amps = projected / math.sqrt(max(probs[pick], 1e-300))
            nstate, move = action.branches[label]
        else:
            raise MachineError("invalid action type")
        steps += 1
        head = _moved(head, move, tape_len)
        state = nstate
        if crossing is not None:
            owner, messages = crossing.update(owner, head, state, steps, messages)
    outcome = "accept" if state in m.accepting else "reject"
    return outcome, steps, messages


def run_monte_carlo(m: MachineSpec, tape: str, step_cap: int | None = None,
                    trials: int = 10_000, seed: int = 0,
                    regions: RegionBounds | None = None) -> RunResult:
    """Sample trajectories with a seeded generator; frequencies estimate probabilities."""
    if trials < 1:
        raise MachineError("trials must be >= 1")
    validate_tape(tape)
    cap = step_cap if step_cap is not None else default_step_cap(m, len(tape))
    crossing = _Crossing(regions) if regions is not None else None
    rng = np.random.default_rng(seed)
    counts = {"accept": 0, "reject": 0, "nonhalt": 0}
    steps_total = 0
    steps_max = 0
    for _ in range(trials):
        outcome, steps, _ = _sample_trajectory(m, tape, cap, rng, crossing)
        counts[outcome] += 1
        steps_total += steps
        steps_max = max(steps_max, steps)
    return RunResult(
        counts["accept"] / trials,
        counts["reject"] / trials,
        counts["nonhalt"] / trials,
        steps_max,
        steps_total / trials,
        space_bits(m),
        m.query_count,
    )


def run_machine(m: MachineSpec, tape: str, *, mode: str = "exact",
                step_cap: int | None = None, prune_eps: float = 1e-12,
                trials: int = 10_000, seed: int = 0) -> RunResult:
    """Kind-dispatching front door used by the service and CLI."""
    if mode == "monte-carlo":
        return run_monte_carlo(m, tape, step_cap, trials=trials, seed=seed)
    if mode != "exact":
        raise MachineError(f"unknown engine mode {mode!r}")
    if m.kind == DETERMINISTIC:
        return run_deterministic(m, tape, step_cap)
    if m.kind == PROBABILISTIC:
        return run_probabilistic_exact(m, tape, step_cap)
    return run_qcfa_exact(m, tape, step_cap, prune_eps)


def run_with_regions(m: MachineSpec, tape: str, regions: RegionBounds, *,
                     mode: str = "exact", step_cap: int | None = None,
                     prune_eps: float = 1e-12, seed: int = 0):
    """Run while recording region crossings; returns (RunResult, CommStats).

    In exact mode the stats report the worst-case branch and the
    mass-weighted expectation; in sample mode a single seeded trajectory.
    """
    if mode == "sample":
        rng = np.random.default_rng(seed)
        cap = step_cap if step_cap is not None else default_step_cap(m, len(tape))
        validate_tape(tape)
        outcome, steps, messages = _sample_trajectory(m, tape, cap, rng, _Crossing(regions))
        accept = 1.0 if outcome == "accept" else 0.0
        nonhalt = 1.0 if outcome == "nonhalt" else 0.0
        result = RunResult(accept, 1.0 - accept - nonhalt, nonhalt, steps,
                           float(steps), space_bits(m), m.query_count)
        return result, CommStats(len(messages), float(len(messages)), messages)
    if mode != "exact":
        raise MachineError(f"unknown transcript mode {mode!r}")
    if m.kind == DETERMINISTIC:
        return _run_deterministic(m, tape, step_cap, regions)
    if m.kind == PROBABILISTIC:
        return _run_probabilistic(m, tape, step_cap, regions)
    return _run_qcfa(m, tape, step_cap, prune_eps, regions)


def lift_deterministic(m: MachineSpec, kind: str) -> MachineSpec:
    """Wrap a deterministic machine as a degenerate machine of another kind."""
    if m.kind != DETERMINISTIC:
        raise MachineError("lift_deterministic needs a deterministic machine")
    base = m.transition
    if kind == PROBABILISTIC:
        def transition(state, symbol):
            act = base(state, symbol)
            return Branch(((1, act.state, act.move),))
        quantum_dim, initial_quantum = 0, None
    elif kind == QUANTUM_CLASSICAL:
        identity = UnitaryOp.identity(1)

        def transition(state, symbol):
            act = base(state, symbol)
            return QUnitary(identity, act.state, act.move)
        quantum_dim, initial_quantum = 1, StateVector.basis(1, 0)
    else:
        raise MachineError(f"cannot lift to kind {kind!r}")
    return MachineSpec(
        kind=kind,
        classical_state_count=m.classical_state_count,
        quantum_dim=quantum_dim,
        initial_classical=m.initial_classical,
        transition=transition,
        accepting=m.accepting,
        rejecting=m.rejecting,
        initial_quantum=initial_quantum,
        query_count=m.query_count,
    )
