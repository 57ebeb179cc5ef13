"""Invariant suites behind ``sigmavqls verify``.

Each check returns a :class:`CheckResult`; checks that would need a dense
oracle wider than :data:`~sigmavqls.sigma_core.ORACLE_LIMIT` are skipped with
a notice rather than failing.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterator
from dataclasses import asdict, dataclass

import numpy as np

from .circuit import (
    Circuit,
    Gate,
    circuit_unitary,
    completion_block_matrix,
    completion_circuit,
    dilation_circuit,
    dilation_matrix,
    gate_census,
)
from .heat_problem import HeatParams, build_system, reconstruction_error
from .sigma_core import (
    ORACLE_LIMIT,
    SIGMA_KINDS,
    SigmaFactor,
    TensorTerm,
    term_completion,
    term_complement_matrix,
    term_matrix,
)
from .vqls import AnsatzSpec, ProblemInstance, build_ansatz, term_values_circuit, term_values_statevector


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    skipped: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class VerifyOptions:
    exhaustive_qubits: int = 3
    dilation_qubits: int = 4
    hadamard_seeds: int = 2
    inject_fault: bool = False
    seed: int = 0


def sigma_terms(max_n: int) -> Iterator[TensorTerm]:
    for n in range(1, max_n + 1):
        for fs in itertools.product(SIGMA_KINDS, repeat=n):
            yield TensorTerm(1.0, fs)


def flip_first_control(c: Circuit) -> Circuit | None:
    """Copy of ``c`` with the polarity of its first control inverted (None if uncontrolled)."""
    for idx, g in enumerate(c.gates):
        if g.controls:
            (q, pol), *rest = g.controls
            bad = Gate(g.kind, g.target, ((q, not pol), *rest), g.angle)
            return Circuit(c.num_qubits, c.gates[:idx] + (bad,) + c.gates[idx + 1:], c.layout)
    return None


def _skip(name: str, width: int) -> CheckResult:
    return CheckResult(name, True, f"skipped: {width} qubits exceeds the oracle limit of {ORACLE_LIMIT}", True)


def check_completion(max_n: int, inject_fault: bool = False) -> CheckResult:
    name = "completion_block_form"
    if max_n + 1 > ORACLE_LIMIT:
        return _skip(name, max_n + 1)
    faulted = False
    count = 0
    for t in sigma_terms(max_n):
        c = completion_circuit(t)
        if inject_fault and not faulted and (bad := flip_first_control(c)) is not None:
            c, faulted = bad, True
        census = gate_census(c)
        if census.mcx != 1 or census.single_qubit > t.num_qubits:
            return CheckResult(name, False, f"{t.tokens()}: census {census.mcx_by_arity}, {census.single_qubit} 1q")
        if not np.allclose(circuit_unitary(c), completion_block_matrix(t), atol=1e-12, rtol=0):
            return CheckResult(name, False, f"{t.tokens()}: unitary differs from the block form")
        count += 1
    return CheckResult(name, True, f"{count} terms, n <= {max_n}")


def _exhaustive(name: str, max_n: int, ok: Callable[[TensorTerm], bool]) -> CheckResult:
    if max_n > ORACLE_LIMIT:
        return _skip(name, max_n)
    count = 0
    for t in sigma_terms(max_n):
        if not ok(t):
            return CheckResult(name, False, f"violated by {t.tokens()}")
        count += 1
    return CheckResult(name, True, f"{count} terms, n <= {max_n}")


def _orthogonal(t: TensorTerm) -> bool:
    m, mc = term_matrix(t, False), term_complement_matrix(t)
    return not any(p.any() for p in (m.conj().T @ mc, mc.conj().T @ m, m @ mc.conj().T, mc @ m.conj().T))


def _idempotent(t: TensorTerm) -> bool:
    m = term_matrix(t, False)
    projs = (m @ m.conj().T, m.conj().T @ m)
    return all(np.array_equal(p @ p, p) for p in projs) and np.array_equal(m @ m.conj().T @ m, m)


def _unitary_completion(t: TensorTerm) -> bool:
    u = term_matrix(term_completion(t))
    return np.array_equal(u.conj().T @ u, np.eye(u.shape[0]))


def check_dilation(max_exact: int, max_count: int) -> CheckResult:
    name = "dilation"
    if max_exact + 1 > ORACLE_LIMIT:
        return _skip(name, max_exact + 1)
    for t in sigma_terms(max_exact):
        if not np.allclose(circuit_unitary(dilation_circuit(t)), dilation_matrix(t), atol=1e-12, rtol=0):
            return CheckResult(name, False, f"{t.tokens()}: unitary differs from the dilation")
    counts = {}
    for n in range(1, max_count + 1):
        for fs in itertools.product((SigmaFactor.PLUS, SigmaFactor.MINUS), repeat=n):
            mcx = gate_census(dilation_circuit(TensorTerm(1.0, fs))).mcx
            if mcx != 2 * n + 1:
                return CheckResult(name, False, f"{TensorTerm(1.0, fs).tokens()}: {mcx} MCX, expected {2 * n + 1}")
        counts[n] = 2 * n + 1
    return CheckResult(name, True, f"exact for n <= {max_exact}; pure sigma+/- MCX counts {counts}")


def check_hadamard(params: HeatParams, seeds: int, seed: int) -> CheckResult:
    name = "hadamard_oracle"
    n = params.num_qubits
    if n + 2 > ORACLE_LIMIT:
        return _skip(name, n + 2)
    p = ProblemInstance.from_system(build_system(params))
    spec = AnsatzSpec(n, 2)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(seeds):
        v = build_ansatz(spec, rng.uniform(-np.pi, np.pi, spec.num_parameters))
        a, b = term_values_circuit(p, v), term_values_statevector(p, v)
        for x, y in ((a.beta, b.beta), (a.overlaps, b.overlaps), (a.delta, b.delta)):
            worst = max(worst, float(np.max(np.abs(x - y))))
    return CheckResult(name, worst <= 1e-9, f"max deviation {worst:.2e} over {seeds} parameter draws")


def check_reconstruction(params: HeatParams) -> CheckResult:
    name = "heat_reconstruction"
    if params.num_qubits > ORACLE_LIMIT:
        return _skip(name, params.num_qubits)
    err = reconstruction_error(build_system(params))
    return CheckResult(name, err <= 1e-12, f"max entrywise error {err:.2e}")


def run_suite(params: HeatParams, opts: VerifyOptions | None = None) -> list[CheckResult]:
    opts = opts or VerifyOptions()
    n = opts.exhaustive_qubits
    return [
        check_completion(n, opts.inject_fault),
        _exhaustive("complement_orthogonality", n, _orthogonal),
        _exhaustive("projection_idempotence", n, _idempotent),
        _exhaustive("completion_unitarity", n, _unitary_completion),
        check_dilation(n, opts.dilation_qubits),
        check_hadamard(params, opts.hadamard_seeds, opts.seed),
        check_reconstruction(params),
    ]
