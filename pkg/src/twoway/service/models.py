"""Request/response schemas for the lab service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class BuildRequest(BaseModel):
    builder: str = Field(..., description="registered builder name")
    params: dict = Field(default_factory=dict)


class MachineDocument(BaseModel):
    doc: dict
    kind: str
    classical_state_count: int
    quantum_dim: int
    space_bits: float
    predicted_steps: Optional[int] = None
    state_counts: Optional[dict] = None


class RunRequest(BaseModel):
    machine: dict = Field(..., description="machine document")
    tape: str = Field(..., description="interior tape symbols over 0/1/#")
    mode: Literal["exact", "monte-carlo"] = "exact"
    step_cap: Optional[int] = None
    prune_eps: float = 1e-12
    trials: int = 10_000
    seed: int = 0


class RunResponse(BaseModel):
    accept_prob: float
    reject_prob: float
    nonhalt_prob: float
    steps_max: int
    steps_expected: float
    space_bits: float
    queries_used: Optional[int] = None


class CommRequest(BaseModel):
    machine: dict
    x: str
    y: str
    mode: Literal["exact", "sample"] = "exact"
    seed: int = 0
    step_cap: Optional[int] = None


class TranscriptMessage(BaseModel):
    direction: str
    step: int
    classical_bits: int
    qubits: int
    payload_state: str


class CommResponse(BaseModel):
    crossings: int
    expected_crossings: float
    total_bits: int
    total_qubits: int
    expected_bits: float
    rounds: int
    block_width: int
    messages: list[TranscriptMessage]
    output: RunResponse


class SweepRequest(BaseModel):
    experiment: str
    ns: list[int]
    seed: int = 0
    mode: Literal["exact", "monte-carlo"] = "exact"
    trials: int = 10_000
    step_cap: Optional[int] = None
    prime_range: Literal["le-n2", "open-interval"] = "le-n2"
    sample_pairs: int = 64
    programs_per_n: int = 10
    format: Literal["csv", "json"] = "csv"


class SweepResponse(BaseModel):
    rows: list[dict]
    document: str
    format: str


class CheckRequest(BaseModel):
    names: Optional[list[str]] = None


class CheckOutcome(BaseModel):
    name: str
    passed: bool
    detail: str


class CheckResponse(BaseModel):
    results: list[CheckOutcome]
    all_passed: bool


class HealthResponse(BaseModel):
    status: str
    version: str
    builders: list[str]
    checks: list[str]
