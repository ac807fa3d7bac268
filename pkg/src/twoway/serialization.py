"""Textual documents for machines and query programs.

Two machine document forms share one format tag:

* builder form  -- {"format": "twoway-machine/1", "kind": ..., "builder":
  {"name": ..., "params": {...}}}; the named builder is looked up in the
  registry and re-invoked on parse. Parametric machines (whose state spaces
  depend on n) always serialize this way.
* explicit form -- adds declared counts, initial states and a transition
  table. Only small machines with JSON-encodable states can be materialized.

Operator grids are nested [re, im] pairs; floats round-trip exactly because
JSON emission uses repr. parse(emit(doc)) == doc for both forms.
"""

from __future__ import annotations

import json
from typing import Callable

import numpy as np

from .machines import (
    Branch,
    MachineError,
    MachineSpec,
    QMeasure,
    QUnitary,
    Step,
)
from .qcore import ProjectiveMeasurement, StateVector, UnitaryOp

MACHINE_FORMAT = "twoway-machine/1"
PROGRAM_FORMAT = "twoway-program/1"

# name -> callable(**params) returning MachineSpec or an object with .machine
BUILDERS: dict[str, Callable] = {}


def register_builder(name: str, fn: Callable):
    BUILDERS[name] = fn


def resolve_machine(obj) -> MachineSpec:
    """Accept a MachineSpec or any wrapper exposing `.machine`."""
    if isinstance(obj, MachineSpec):
        return obj
    machine = getattr(obj, "machine", None)
    if isinstance(machine, MachineSpec):
        return machine
    raise MachineError(f"not a machine: {type(obj).__name__}")


def _complex_to_pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def _grid(matrix: np.ndarray) -> list:
    return [[_complex_to_pair(z) for z in row] for row in matrix]


def _vector(vec: np.ndarray) -> list:
    return [_complex_to_pair(z) for z in vec]


def _from_vector(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)


def _from_grid(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows],
                    dtype=np.complex128)


def op_to_doc(op: UnitaryOp) -> dict:
    if op.diag is not None:
        return {"diag": _vector(op.diag)}
    return {"dense": _grid(op.matrix)}


def op_from_doc(doc: dict) -> UnitaryOp:
    if "diag" in doc:
        return UnitaryOp(diag=_from_vector(doc["diag"]))
    return UnitaryOp(_from_grid(doc["dense"]))


def measurement_to_doc(m: ProjectiveMeasurement) -> dict:
    return {"projectors": [_grid(p) for p in m.projectors],
            "labels": list(m.outcome_labels)}


def measurement_from_doc(doc: dict) -> ProjectiveMeasurement:
    return ProjectiveMeasurement([_from_grid(p) for p in doc["projectors"]],
                                 doc["labels"])


def action_to_doc(action) -> dict:
    kind = type(action)
    if kind is Step:
        return {"type": "step", "state": action.state, "move": action.move}
    if kind is Branch:
        return {"type": "random",
                "choices": [{"prob": float(w), "state": s, "move": mv}
                            for w, s, mv in action.choices]}
    if kind is QUnitary:
        return {"type": "unitary", "op": op_to_doc(action.op),
                "state": action.state, "move": action.move}
    if kind is QMeasure:
        return {"type": "measure",
                "measurement": measurement_to_doc(action.measurement),
                "outcomes": [{"label": label, "state": s, "move": mv}
                             for label, (s, mv) in action.branches.items()]}
    raise MachineError(f"cannot serialize action {action!r}")


def action_from_doc(doc: dict):
    t = doc["type"]
    if t == "step":
        return Step(doc["state"], doc["move"])
    if t == "random":
        return Branch(tuple((c["prob"], c["state"], c["move"]) for c in doc["choices"]))
    if t == "unitary":
        return QUnitary(op_from_doc(doc["op"]), doc["state"], doc["move"])
    if t == "measure":
        return QMeasure(measurement_from_doc(doc["measurement"]),
                        {o["label"]: (o["state"], o["move"]) for o in doc["outcomes"]})
    raise MachineError(f"unknown action type {t!r}")


def _json_state(state):
    if not isinstance(state, (str, int)):
        raise MachineError(f"explicit tables need str/int states, got {type(state).__name__}")
    return state


def materialize_table(m: MachineSpec, symbols: str = "01#^$", max_states: int = 10_000) -> dict:
    """Enumerate reachable (state, symbol) transitions into an explicit table.

    Only practical for small machines; states must be JSON-encodable. Raises
    when the reachable state set exceeds max_states.
    """
    table: dict = {}
    seen = {m.initial_classical}
    frontier = [m.initial_classical]
    while frontier:
        state = frontier.pop()
        if state in m.accepting or state in m.rejecting:
            continue
        for symbol in symbols:
            try:
                action = m.transition(state, symbol)
            except (KeyError, LookupError):
                continue
            if action is None:
                continue
            table[(_json_state(state), symbol)] = action
            if type(action) is Step:
                nexts = [action.state]
            elif type(action) is Branch:
                nexts = [s for _, s, _ in action.choices]
            elif type(action) is QUnitary:
                nexts = [action.state]
            else:
                nexts = [s for s, _ in action.branches.values()]
            for ns in nexts:
                if ns not in seen:
                    seen.add(ns)
                    frontier.append(ns)
                    if len(seen) > max_states:
                        raise MachineError(f"machine exceeds {max_states} reachable states")
    return table


def machine_to_doc(obj) -> dict:
    """Serialize a machine; builder provenance wins over table materialization."""
    m = resolve_machine(obj)
    if m.builder is not None:
        name, params = m.builder
        return {"format": MACHINE_FORMAT, "kind": m.kind,
                "builder": {"name": name, "params": dict(params)}}
    table = m.table if m.table is not None else materialize_table(m)
    doc = {
        "format": MACHINE_FORMAT,
        "kind": m.kind,
        "classical_state_count": m.classical_state_count,
        "quantum_dim": m.quantum_dim,
        "initial_classical": _json_state(m.initial_classical),
        "accepting": sorted(map(str, m.accepting)) if all(isinstance(s, str) for s in m.accepting)
        else sorted(m.accepting),
        "rejecting": sorted(map(str, m.rejecting)) if all(isinstance(s, str) for s in m.rejecting)
        else sorted(m.rejecting),
        "transitions": [
            {"state": state, "symbol": symbol, "action": action_to_doc(action)}
            for (state, symbol), action in sorted(table.items(), key=lambda kv: (str(kv[0][0]), kv[0][1]))
        ],
    }
    if m.initial_quantum is not None:
        doc["initial_quantum"] = _vector(m.initial_quantum.amps)
    if m.query_count is not None:
        doc["query_count"] = m.query_count
    return doc


def machine_from_doc(doc: dict):
    """Parse a machine document; returns the built object (builder form may
    return a wrapper exposing `.machine`)."""
    if doc.get("format") != MACHINE_FORMAT:
        raise MachineError(f"not a machine document: format {doc.get('format')!r}")
    if "builder" in doc:
        name = doc["builder"]["name"]
        if name not in BUILDERS:
            raise MachineError(f"unknown builder {name!r}")
        built = BUILDERS[name](**doc["builder"].get("params", {}))
        if resolve_machine(built).kind != doc["kind"]:
            raise MachineError("builder kind does not match document kind")
        return built
    table = {(t["state"], t["symbol"]): action_from_doc(t["action"])
             for t in doc["transitions"]}

    def transition(state, symbol):
        return table.get((state, symbol))

    initial_quantum = None
    if "initial_quantum" in doc:
        initial_quantum = StateVector(_from_vector(doc["initial_quantum"]))
    return MachineSpec(
        kind=doc["kind"],
        classical_state_count=doc["classical_state_count"],
        quantum_dim=doc["quantum_dim"],
        initial_classical=doc["initial_classical"],
        transition=transition,
        accepting=frozenset(doc["accepting"]),
        rejecting=frozenset(doc["rejecting"]),
        initial_quantum=initial_quantum,
        query_count=doc.get("query_count"),
        table=table,
    )


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False)


def loads(text: str) -> dict:
    return json.loads(text)
