"""HTTP face of the lab: build machines, run tapes, transcripts, sweeps, checks.

The service is stateless; every request carries the full machine document
(builder reference or explicit table), so instances can be scaled or
restarted freely. The CLI is a thin client of these endpoints.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..checks import ALL_CHECKS, run_checks
from ..comm import simulate_crossing_protocol, transcript_to_doc
from ..compilers import CompiledMachine
from ..experiments import ExperimentSpec, emit, run_experiment
from ..langs import bracket
from ..machines import MachineError, run_machine, space_bits
from ..serialization import BUILDERS, machine_from_doc, machine_to_doc, resolve_machine
from .models import (
    BuildRequest,
    CheckOutcome,
    CheckRequest,
    CheckResponse,
    CommRequest,
    CommResponse,
    HealthResponse,
    MachineDocument,
    RunRequest,
    RunResponse,
    SweepRequest,
    SweepResponse,
    TranscriptMessage,
)

app = FastAPI(
    title="twoway lab",
    version=__version__,
    description="Exact simulation of two-way automata with time/space/communication accounting",
)


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=422, detail=str(exc))


def _machine_payload(built) -> MachineDocument:
    machine = resolve_machine(built)
    return MachineDocument(
        doc=machine_to_doc(built),
        kind=machine.kind,
        classical_state_count=machine.classical_state_count,
        quantum_dim=machine.quantum_dim,
        space_bits=space_bits(machine),
        predicted_steps=built.predicted_steps if isinstance(built, CompiledMachine) else None,
        state_counts=built.state_counts if isinstance(built, CompiledMachine) else None,
    )


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__,
                          builders=sorted(BUILDERS), checks=sorted(ALL_CHECKS))


@app.post("/build", response_model=MachineDocument)
def build(request: BuildRequest) -> MachineDocument:
    if request.builder not in BUILDERS:
        raise HTTPException(status_code=404, detail=f"unknown builder {request.builder!r}")
    try:
        built = BUILDERS[request.builder](**request.params)
    except (MachineError, ValueError, TypeError) as exc:
        raise _bad_request(exc)
    return _machine_payload(built)


@app.post("/run", response_model=RunResponse)
def run(request: RunRequest) -> RunResponse:
    try:
        machine = resolve_machine(machine_from_doc(request.machine))
        tape = bracket(request.tape)
        result = run_machine(machine, tape, mode=request.mode,
                             step_cap=request.step_cap, prune_eps=request.prune_eps,
                             trials=request.trials, seed=request.seed)
    except (MachineError, ValueError) as exc:
        raise _bad_request(exc)
    return RunResponse(**result.to_dict())


@app.post("/comm", response_model=CommResponse)
def comm(request: CommRequest) -> CommResponse:
    try:
        built = machine_from_doc(request.machine)
        transcript = simulate_crossing_protocol(built, request.x, request.y,
                                                mode=request.mode, seed=request.seed,
                                                step_cap=request.step_cap)
    except (MachineError, ValueError) as exc:
        raise _bad_request(exc)
    doc = transcript_to_doc(transcript)
    return CommResponse(
        crossings=doc["crossings"],
        expected_crossings=doc["expected_crossings"],
        total_bits=doc["total_bits"],
        total_qubits=doc["total_qubits"],
        expected_bits=doc["expected_bits"],
        rounds=doc["rounds"],
        block_width=doc["block_width"],
        messages=[TranscriptMessage(**msg) for msg in doc["messages"]],
        output=RunResponse(**doc["output"]),
    )


@app.post("/sweep", response_model=SweepResponse)
def sweep(request: SweepRequest) -> SweepResponse:
    try:
        spec = ExperimentSpec(
            experiment=request.experiment,
            ns=tuple(request.ns),
            seed=request.seed,
            mode=request.mode,
            trials=request.trials,
            step_cap=request.step_cap,
            prime_range=request.prime_range,
            sample_pairs=request.sample_pairs,
            programs_per_n=request.programs_per_n,
        )
        rows = run_experiment(spec)
        document = emit(rows, request.format)
    except (MachineError, ValueError) as exc:
        raise _bad_request(exc)
    return SweepResponse(rows=[row.as_record() for row in rows],
                         document=document, format=request.format)


@app.post("/check", response_model=CheckResponse)
def check(request: CheckRequest) -> CheckResponse:
    results = run_checks(request.names)
    return CheckResponse(
        results=[CheckOutcome(name=r.name, passed=r.passed, detail=r.detail)
                 for r in results],
        all_passed=all(r.passed for r in results),
    )
