"""Self-contained invariant suites behind the `check` command.

Each check returns (name, passed, detail) and is independent of the pytest
suite so a deployed service can re-verify itself. The full set targets well
under a minute of runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .comm import simulate_crossing_protocol
from .compilers import (
    and_gadget_walk,
    bad_prime_ratio,
    build_eq_fingerprint_2pfa,
    build_grover_machine,
    build_parity2_machine,
)
from .langs import encode_pair, eq_predicate, ne_eval
from .machines import (
    run_monte_carlo,
    run_probabilistic_exact,
    run_qcfa_exact,
)
from .qcore import ProjectiveMeasurement, StateVector, UnitaryOp, apply_unitary, check_unitary
from .querymodel import oracle_matrix, parity2_program, run_query_program


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, passed, detail=""):
    return CheckResult(name, bool(passed), detail)


def check_unitarity_and_measurement() -> CheckResult:
    rng = np.random.default_rng(0)
    for dim in (2, 3, 5):
        z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        q, r = np.linalg.qr(z)
        u = UnitaryOp(q * (np.diag(r) / np.abs(np.diag(r))))
        if not check_unitary(u):
            return _result("unitarity-measurement", False, f"random unitary dim {dim} rejected")
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v = StateVector(v / np.linalg.norm(v))
        if abs(apply_unitary(u, v).norm_sq() - 1.0) > 1e-9:
            return _result("unitarity-measurement", False, "norm drifted")
    try:
        UnitaryOp(np.zeros((2, 2)))
        return _result("unitarity-measurement", False, "zero matrix accepted")
    except ValueError:
        pass
    try:
        bad = np.array([[0.5, 0], [0, 0]], dtype=complex)
        ProjectiveMeasurement([bad, np.eye(2) - bad], [0, 1])
        return _result("unitarity-measurement", False, "invalid projector accepted")
    except ValueError:
        pass
    return _result("unitarity-measurement", True, "random unitaries pass, malformed rejected")


def check_mass_conservation() -> CheckResult:
    # the exact engines raise on violation; run both engine families
    fp = build_eq_fingerprint_2pfa(4)
    res = run_probabilistic_exact(fp.machine, encode_pair("0101", "0110"))
    total = float(res.accept_prob + res.reject_prob + res.nonhalt_prob)
    if abs(total - 1.0) > 1e-9:
        return _result("mass-conservation", False, f"fingerprint total {total}")
    gm = build_grover_machine(4)
    res = run_qcfa_exact(gm.machine, encode_pair("0110", "0011"))
    total = float(res.accept_prob + res.reject_prob + res.nonhalt_prob)
    if abs(total - 1.0) > 1e-9:
        return _result("mass-conservation", False, f"search machine total {total}")
    return _result("mass-conservation", True, "halting masses sum to 1 on both engines")


def check_monte_carlo_agreement(trials: int = 100_000) -> CheckResult:
    fp = build_eq_fingerprint_2pfa(4)
    tape = encode_pair("0101", "1101")
    exact = float(run_probabilistic_exact(fp.machine, tape).accept_prob)
    sampled = run_monte_carlo(fp.machine, tape, trials=trials, seed=17).accept_prob
    band = 4 * math.sqrt(max(exact * (1 - exact), 1e-12) / trials) + 0.002
    if abs(sampled - exact) > band:
        return _result("monte-carlo-agreement", False,
                       f"fingerprint: |{sampled} - {exact}| > {band}")
    pm = build_parity2_machine()
    mc = run_monte_carlo(pm.machine, "^01$", trials=2000, seed=3).accept_prob
    if abs(mc - 1.0) > 1e-9:
        return _result("monte-carlo-agreement", False, f"parity sample {mc} != 1")
    return _result("monte-carlo-agreement", True,
                   f"sampled within {band:.4f} of exact at {trials} trials")


def _ne_table_eval(d: int, bits: str) -> int:
    values = [int(b) for b in bits]
    for _ in range(d):
        values = [0 if values[i] == values[i + 1] == values[i + 2] else 1
                  for i in range(0, len(values), 3)]
    return values[0]


def check_ne_table() -> CheckResult:
    for d in (0, 1, 2):
        for value in range(2 ** (3 ** d)):
            bits = format(value, f"0{3 ** d}b")
            if ne_eval(d, bits) != _ne_table_eval(d, bits):
                return _result("ne-table", False, f"mismatch at d={d}, bits={bits}")
    return _result("ne-table", True, "all 512 depth-2 inputs (plus smaller depths) agree")


def check_machine_vs_oracle() -> CheckResult:
    n = 4
    fp = build_eq_fingerprint_2pfa(n, exact_arithmetic=True)
    for xv in range(2 ** n):
        for yv in range(2 ** n):
            x, y = format(xv, f"0{n}b"), format(yv, f"0{n}b")
            res = run_probabilistic_exact(fp.machine, encode_pair(x, y))
            if eq_predicate(x, y):
                if res.accept_prob != 1:
                    return _result("machine-vs-oracle", False,
                                   f"member ({x},{y}) accepted with {res.accept_prob}")
            elif res.accept_prob != bad_prime_ratio(x, y):
                return _result("machine-vs-oracle", False,
                               f"({x},{y}): {res.accept_prob} != ratio")
    gm = build_grover_machine(4)
    for x, y in [("1000", "1000"), ("0110", "0010"), ("1111", "1111")]:
        res = run_qcfa_exact(gm.machine, encode_pair(x, y))
        if float(res.accept_prob) < 2 / 3:
            return _result("machine-vs-oracle", False, f"member ({x},{y}) below 2/3")
    for x, y in [("1010", "0101"), ("0000", "1111")]:
        res = run_qcfa_exact(gm.machine, encode_pair(x, y))
        if float(res.accept_prob) != 0.0:
            return _result("machine-vs-oracle", False, f"non-member ({x},{y}) accepted")
    return _result("machine-vs-oracle", True,
                   "equality machine exact on all 256 pairs; search machine one-sided")


def check_compiler_faithfulness() -> CheckResult:
    pm = build_parity2_machine()
    program = parity2_program()
    worst = 0.0
    for v in range(4):
        x = format(v, "02b")
        mres = run_qcfa_exact(pm.machine, "^" + x + "$")
        qres = run_query_program(program, x)
        worst = max(worst, abs(float(mres.accept_prob) - qres.accept_prob))
    if worst > 1e-9:
        return _result("compiler-faithfulness", False, f"deviation {worst}")
    return _result("compiler-faithfulness", True, f"max deviation {worst:.2e}")


def check_gadget() -> CheckResult:
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (2, 3):
        for xv in range(2 ** n):
            for yv in range(2 ** n):
                x, y = format(xv, f"0{n}b"), format(yv, f"0{n}b")
                state = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
                state /= np.linalg.norm(state)
                walked, leak = and_gadget_walk(x, y, state)
                direct = oracle_matrix(format(xv & yv, f"0{n}b")).apply_raw(state)
                worst = max(worst, float(np.max(np.abs(walked - direct))), leak)
    if worst > 1e-9:
        return _result("gadget", False, f"deviation {worst}")
    return _result("gadget", True, f"max deviation {worst:.2e}, aux exactly clean")


def check_fingerprint_error_bound() -> CheckResult:
    n = 8
    fp = build_eq_fingerprint_2pfa(n)
    prime_count = fp.provenance["primes"]
    worst = Fraction(0)
    for diff in range(1, 2 ** n):
        x = format(diff, f"0{n}b")
        worst = max(worst, bad_prime_ratio(x, "0" * n))
    bound = 2 * math.log(n) / n
    if float(worst) > bound:
        return _result("fingerprint-error-bound", False, f"{float(worst)} > {bound}")
    if worst > Fraction(n - 1, prime_count):
        return _result("fingerprint-error-bound", False, "bad-prime count exceeds n-1")
    return _result("fingerprint-error-bound", True,
                   f"worst error {float(worst):.4f} <= 2 ln(n)/n = {bound:.4f}")


def check_crossing_protocol() -> CheckResult:
    fp = build_eq_fingerprint_2pfa(8)
    plain = run_probabilistic_exact(fp.machine, encode_pair("00110011", "00110011"))
    t = simulate_crossing_protocol(fp, "00110011", "00110011")
    if t.crossings != 1:
        return _result("crossing-protocol", False, f"{t.crossings} crossings, expected 1")
    if t.output != plain:
        return _result("crossing-protocol", False, "transcript changed the run result")
    gm = build_grover_machine(4)
    t = simulate_crossing_protocol(gm, "0101", "0110")
    bound = t.output.steps_max / 4 + 1
    if t.crossings > bound:
        return _result("crossing-protocol", False, f"{t.crossings} crossings > {bound}")
    return _result("crossing-protocol", True,
                   "single sweep crosses once; crossings within steps/width + 1")


ALL_CHECKS = {
    "unitarity-measurement": check_unitarity_and_measurement,
    "mass-conservation": check_mass_conservation,
    "monte-carlo-agreement": check_monte_carlo_agreement,
    "ne-table": check_ne_table,
    "machine-vs-oracle": check_machine_vs_oracle,
    "compiler-faithfulness": check_compiler_faithfulness,
    "gadget": check_gadget,
    "fingerprint-error-bound": check_fingerprint_error_bound,
    "crossing-protocol": check_crossing_protocol,
}


def run_checks(names=None) -> list[CheckResult]:
    selected = list(ALL_CHECKS) if not names else list(names)
    results = []
    for name in selected:
        if name not in ALL_CHECKS:
            results.append(CheckResult(name, False, "unknown check"))
            continue
        try:
            results.append(ALL_CHECKS[name]())
        except Exception as exc:  # a crashed check is a failed check
            results.append(CheckResult(name, False, f"raised {type(exc).__name__}: {exc}"))
    return results
