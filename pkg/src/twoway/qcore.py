"""Complex-amplitude substrate: state vectors, unitaries, projective measurements.

Everything downstream (automaton engines, query programs, compiled machines)
builds on these types. Operators are validated once at construction and then
applied freely in hot loops; the tolerance policy is shared across the whole
package. Diagonal unitaries get a dedicated representation because every
input oracle in this domain is diagonal and gets applied once per tape cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TolerancePolicy:
    """Numeric slack for norm, unitarity and probability checks.

    All tolerances must be strictly positive and at most 1e-6; the default
    1e-9 is loose for double precision (constructions here use exactly
    representable phases and small rotations) yet catches logic bugs.
    """

    tol_norm: float = 1e-9
    tol_unitary: float = 1e-9
    tol_prob: float = 1e-9

    def __post_init__(self):
        for name in ("tol_norm", "tol_unitary", "tol_prob"):
            value = getattr(self, name)
            if not (0.0 < value <= 1e-6):
                raise ValueError(f"{name} must be in (0, 1e-6], got {value}")


DEFAULT_TOL = TolerancePolicy()


def _as_complex_array(values, *, ndim: int) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.complex128)
    if arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-dimensional data, got shape {arr.shape}")
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise ValueError("amplitudes must be finite (no NaN/Inf)")
    return arr


@dataclass(frozen=True)
class StateVector:
    """Complex amplitude vector; flagged normalized when its squared norm is 1."""

    amps: np.ndarray
    normalized: bool = True
    tol: TolerancePolicy = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        amps = _as_complex_array(self.amps, ndim=1)
        if amps.size < 1:
            raise ValueError("state vector must have dim >= 1")
        object.__setattr__(self, "amps", amps)
        if self.normalized and abs(self.norm_sq() - 1.0) > self.tol.tol_norm:
            raise ValueError(f"state not normalized: |v|^2 = {self.norm_sq()!r}")

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    @staticmethod
    def basis(dim: int, index: int) -> "StateVector":
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return StateVector(amps)


class UnitaryOp:
    """A unitary operator, stored dense or as a diagonal.

    Validation (U U-dagger close to identity in max-entry magnitude) happens
    once here; `apply` trusts it afterwards so engines can run it per step.
    """

    def __init__(self, matrix=None, *, diag=None, tol: TolerancePolicy = DEFAULT_TOL,
                 _checked: bool = False):
        if (matrix is None) == (diag is None):
            raise ValueError("provide exactly one of matrix= or diag=")
        self.tol = tol
        if diag is not None:
            self.diag = _as_complex_array(diag, ndim=1)
            self.matrix = None
            self.dim = self.diag.size
        else:
            self.matrix = _as_complex_array(matrix, ndim=2)
            if self.matrix.shape[0] != self.matrix.shape[1]:
                raise ValueError(f"unitary must be square, got {self.matrix.shape}")
            self.diag = None
            self.dim = self.matrix.shape[0]
        if not _checked and not self.is_unitary():
            raise ValueError("operator fails the unitarity check")
        # engines skip applying identities, which dominate compiled walks
        if self.diag is not None:
            self.is_identity = bool(np.all(self.diag == 1.0))
        else:
            self.is_identity = bool(np.array_equal(self.matrix, np.eye(self.dim)))

    @staticmethod
    def identity(dim: int) -> "UnitaryOp":
        return UnitaryOp(diag=np.ones(dim, dtype=np.complex128), _checked=True)

    @staticmethod
    def diagonal(entries, tol: TolerancePolicy = DEFAULT_TOL) -> "UnitaryOp":
        return UnitaryOp(diag=entries, tol=tol)

    def is_unitary(self) -> bool:
        if self.diag is not None:
            return bool(np.max(np.abs(np.abs(self.diag) ** 2 - 1.0)) <= self.tol.tol_unitary)
        product = self.matrix @ self.matrix.conj().T
        return bool(np.max(np.abs(product - np.eye(self.dim))) <= self.tol.tol_unitary)

    def adjoint(self) -> "UnitaryOp":
        if self.diag is not None:
            return UnitaryOp(diag=self.diag.conj(), tol=self.tol, _checked=True)
        return UnitaryOp(self.matrix.conj().T, tol=self.tol, _checked=True)

    def to_matrix(self) -> np.ndarray:
        if self.diag is not None:
            return np.diag(self.diag)
        return self.matrix

    def apply_raw(self, amps: np.ndarray) -> np.ndarray:
        """Apply to a raw amplitude array (no revalidation; engine hot path)."""
        if self.diag is not None:
            return self.diag * amps
        return self.matrix @ amps


def check_unitary(u: UnitaryOp, tol: TolerancePolicy | None = None) -> bool:
    """True iff U U-dagger deviates from identity by at most tol_unitary."""
    if tol is None:
        return u.is_unitary()
    if u.diag is not None:
        return bool(np.max(np.abs(np.abs(u.diag) ** 2 - 1.0)) <= tol.tol_unitary)
    product = u.matrix @ u.matrix.conj().T
    return bool(np.max(np.abs(product - np.eye(u.dim))) <= tol.tol_unitary)


def apply_unitary(u: UnitaryOp, v: StateVector) -> StateVector:
    """Return u @ v. Norm is preserved within tol_norm for any accepted u."""
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: operator {u.dim}, state {v.dim}")
    out = u.apply_raw(v.amps)
    return StateVector(out, normalized=v.normalized, tol=v.tol)


class ProjectiveMeasurement:
    """A complete family of orthogonal projectors with outcome labels.

    Requires P^2 = P, P = P-dagger for each projector and sum(P) = identity,
    all within tol_unitary in max-entry magnitude.
    """

    def __init__(self, projectors, outcome_labels, tol: TolerancePolicy = DEFAULT_TOL,
                 _checked: bool = False):
        self.projectors = [_as_complex_array(p, ndim=2) for p in projectors]
        self.outcome_labels = list(outcome_labels)
        self.tol = tol
        if not self.projectors:
            raise ValueError("measurement needs at least one projector")
        if len(self.projectors) != len(self.outcome_labels):
            raise ValueError("projectors and outcome_labels must have equal length")
        self.dim = self.projectors[0].shape[0]
        for p in self.projectors:
            if p.shape != (self.dim, self.dim):
                raise ValueError("all projectors must be square with equal dim")
        if not _checked:
            self._validate()

    def _validate(self):
        t = self.tol.tol_unitary
        total = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for p in self.projectors:
            if np.max(np.abs(p @ p - p)) > t:
                raise ValueError("projector is not idempotent")
            if np.max(np.abs(p - p.conj().T)) > t:
                raise ValueError("projector is not Hermitian")
            total += p
        if np.max(np.abs(total - np.eye(self.dim))) > t:
            raise ValueError("projectors do not sum to identity")

    @staticmethod
    def basis_groups(dim: int, groups, labels, tol: TolerancePolicy = DEFAULT_TOL) -> "ProjectiveMeasurement":
        """Measurement whose projectors are onto disjoint basis-index groups."""
        projectors = []
        for group in groups:
            p = np.zeros((dim, dim), dtype=np.complex128)
            for idx in group:
                p[idx, idx] = 1.0
            projectors.append(p)
        return ProjectiveMeasurement(projectors, labels, tol=tol)

    def outcome_probs(self, amps: np.ndarray) -> list[float]:
        """Outcome probabilities ||P_i v||^2 for a raw amplitude array."""
        return [float(np.vdot(p @ amps, p @ amps).real) for p in self.projectors]


def measure(m: ProjectiveMeasurement, v: StateVector):
    """All measurement outcomes of v: list of (label, probability, post_state).

    Probabilities are clamped to [0, 1] after they pass the tolerance check;
    post_state is None when the outcome probability is below tol_prob (the
    renormalized state is undefined there).
    """
    if m.dim != v.dim:
        raise ValueError(f"dimension mismatch: measurement {m.dim}, state {v.dim}")
    tol = v.tol
    results = []
    total = 0.0
    for label, p in zip(m.outcome_labels, m.projectors):
        projected = p @ v.amps
        prob = float(np.vdot(projected, projected).real)
        if prob < -tol.tol_prob or prob > 1.0 + tol.tol_prob:
            raise ValueError(f"outcome probability {prob} outside [0,1] tolerance")
        total += prob
        clamped = min(max(prob, 0.0), 1.0)
        if prob < tol.tol_prob:
            results.append((label, clamped, None))
        else:
            post = StateVector(projected / np.sqrt(prob), tol=v.tol)
            results.append((label, clamped, post))
    if abs(total - 1.0) > tol.tol_prob:
        raise ValueError(f"outcome probabilities sum to {total}, not 1")
    return results


def clamp_probability(p: float, tol: TolerancePolicy = DEFAULT_TOL) -> float:
    """Clamp to [0, 1], rejecting values outside the tolerance band."""
    if p < -tol.tol_prob or p > 1.0 + tol.tol_prob:
        raise ValueError(f"probability {p} outside tolerance band")
    return min(max(p, 0.0), 1.0)


def column_unitary(dim: int, column: int, target: np.ndarray) -> UnitaryOp:
    """A unitary whose given column equals the (unit) target vector.

    Used to load a prepared state from a known basis state: U e_column =
    target, exactly (the column is copied bit-for-bit). The remaining columns
    complete an orthonormal basis via QR.
    """
    target = _as_complex_array(target, ndim=1)
    if target.size != dim:
        raise ValueError("target dimension mismatch")
    nrm = np.linalg.norm(target)
    if abs(nrm - 1.0) > DEFAULT_TOL.tol_norm:
        raise ValueError("target must be a unit vector")
    seed = np.eye(dim, dtype=np.complex128)
    seed[:, 0] = target
    # Push the remaining identity columns through QR; column 0 of Q is then
    # parallel to target, and we overwrite it to make the equality exact.
    q, r = np.linalg.qr(seed)
    q[:, 0] = target
    if column != 0:
        q[:, [0, column]] = q[:, [column, 0]]
    return UnitaryOp(q, _checked=False)


def swap_unitary(dim: int, a: int, b: int) -> UnitaryOp:
    """Permutation unitary exchanging basis states a and b."""
    m = np.eye(dim, dtype=np.complex128)
    if a != b:
        m[[a, b]] = m[[b, a]]
    return UnitaryOp(m, _checked=True)
