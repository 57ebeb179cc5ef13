"""One test per acceptance criterion, each at its stated tolerance.

Every test records a single ``criterion N PASS|FAIL`` line, collected in the
terminal summary by ``conftest.py``.
"""

import itertools
import json
import math
import time

import numpy as np

from sigmavqls.circuit import (
    Circuit,
    Gate,
    GateKind,
    circuit_unitary,
    completion_block_matrix,
    completion_circuit,
    dilation_circuit,
    dilation_matrix,
    gate_census,
)
from sigmavqls.cli import main
from sigmavqls.decomposer import decompose_heat, heat_closed_form_count, pauli_decompose
from sigmavqls.heat_problem import HeatParams, assemble_dense, build_system
from sigmavqls.sigma_core import (
    SIGMA_KINDS,
    SigmaFactor,
    TensorTerm,
    decomposition_matrix,
    term_complement_matrix,
    term_completion,
    term_matrix,
)
from sigmavqls.vqls import AnsatzSpec, ProblemInstance, build_ansatz, term_values_circuit

TABLE_ROWS = [(4, 4), (4, 8), (8, 8), (8, 16)]
TABLE_PAULI = [26, 54, 102, 206]
TABLE_SIGMA = [19, 21, 25, 27]


def sigma_terms(max_n=3):
    for n in range(1, max_n + 1):
        for fs in itertools.product(SIGMA_KINDS, repeat=n):
            yield TensorTerm(1.0, fs)


def dense_term_values(p, psi):
    """beta, e (gamma = e e^*), delta straight from the defining inner products."""
    n = p.num_qubits
    u = circuit_unitary(p.b_prep)
    mats = [term_matrix(t, False) for t in p.decomposition]
    vecs = [a @ psi for a in mats]
    beta = np.array([[np.vdot(wj, wi) for wj in vecs] for wi in vecs])
    e = np.array([np.vdot(p.b_vector, w) for w in vecs])
    delta = []
    for k in range(n):
        z = np.kron(np.kron(np.eye(2**k), np.diag([1.0, -1.0])), np.eye(2 ** (n - k - 1)))
        obs = u @ z @ u.conj().T
        delta.append([[np.vdot(wj, obs @ wi) for wj in vecs] for wi in vecs])
    return beta, e, np.array(delta)


def test_criterion_1_pauli_counts(acceptance):
    start = time.perf_counter()
    counts = [pauli_decompose(assemble_dense(HeatParams(n_x=nx, n_t=nt)), prune_tol=1e-10).count
              for nx, nt in TABLE_ROWS]
    elapsed = time.perf_counter() - start
    acceptance(1, "Pauli term counts", counts == TABLE_PAULI and elapsed < 60,
               f"counts {counts} (expected {TABLE_PAULI}) in {elapsed:.2f}s")


def test_criterion_2_sigma_counts(acceptance):
    raw, merged, closed, table_formula, errs = [], [], [], [], []
    for nx, nt in TABLE_ROWS:
        params = HeatParams(n_x=nx, n_t=nt)
        d = decompose_heat(params)
        s, t = nx.bit_length() - 1, nt.bit_length() - 1
        raw.append(len(d))
        merged.append(len(d.merged()))
        closed.append(heat_closed_form_count(nx, nt))
        table_formula.append((2 * t + 1) + (4 * s + 6))
        errs.append(float(np.max(np.abs(decomposition_matrix(d) - assemble_dense(params)))))
    ok = (
        all(r <= b and m <= b for r, m, b in zip(raw, merged, TABLE_SIGMA))
        and raw == closed == [(t + 1) + (4 * s + 6) for s, t in ((2, 2), (2, 3), (3, 3), (3, 4))]
        and all(m == r - 1 for m, r in zip(merged, raw))
        and max(errs) <= 1e-12
    )
    acceptance(
        2, "sigma term counts",
        ok,
        f"A1+A2 terms {raw} = (t+1)+(4s+6) {closed} <= table {TABLE_SIGMA}; after summing the shared identity "
        f"{merged}; table equals (2t+1)+(4s+6) {table_formula}; max reconstruction error {max(errs):.1e}",
    )


def test_criterion_3_completion_synthesis(acceptance):
    failures, count = [], 0
    for t in sigma_terms():
        c = completion_circuit(t)
        census = gate_census(c)
        exact = np.max(np.abs(circuit_unitary(c) - completion_block_matrix(t))) <= 1e-12
        if not (exact and census.mcx == 1 and census.single_qubit <= t.num_qubits):
            failures.append(t.tokens())
        count += 1
    acceptance(3, "single-MCX unitary completion", not failures and count == 155,
               f"{count} terms checked, failures {failures[:5]}")


def test_criterion_4_dilation_counts(acceptance):
    c = dilation_circuit(TensorTerm(1.0, (SigmaFactor.MINUS,)))
    swap_not = (
        Gate(GateKind.X, 0),
        Gate(GateKind.MCX, 1, ((0, True),)),
        Gate(GateKind.MCX, 0, ((1, True),)),
        Gate(GateKind.MCX, 1, ((0, True),)),
    )
    fig_ok = c.gates == swap_not and np.array_equal(
        circuit_unitary(c), dilation_matrix(TensorTerm(1.0, (SigmaFactor.MINUS,)))
    )
    dilation_counts, completion_counts = {}, {}
    for n in range(1, 5):
        for fs in itertools.product((SigmaFactor.PLUS, SigmaFactor.MINUS), repeat=n):
            t = TensorTerm(1.0, fs)
            dilation_counts.setdefault(n, set()).add(gate_census(dilation_circuit(t)).mcx)
            completion_counts.setdefault(n, set()).add(gate_census(completion_circuit(t)).mcx)
    expected = {n: {2 * n - 1} for n in range(1, 5)}
    acceptance(
        4, "dilation MCX counts",
        fig_ok and dilation_counts == expected and all(v == {1} for v in completion_counts.values()),
        f"sigma_- dilation has the NOT then SWAP structure: {fig_ok}; dilation MCX counts {dict(dilation_counts)} vs required "
        f"2n-1 {expected}; completion MCX counts {dict(completion_counts)}",
    )


def test_criterion_5_cost_term_oracle(acceptance):
    start = time.perf_counter()
    p = ProblemInstance.from_system(build_system(HeatParams(n_x=2, n_t=2)))
    spec = AnsatzSpec(2, 2)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        theta = rng.uniform(-math.pi, math.pi, spec.num_parameters)
        v = build_ansatz(spec, theta)
        values = term_values_circuit(p, v)
        beta, e, delta = dense_term_values(p, np.asarray(circuit_unitary(v)[:, 0]))
        gamma = np.outer(e, e.conj())
        for got, want in ((values.beta, beta), (values.gamma, gamma), (values.delta, delta)):
            worst = max(worst, float(np.max(np.abs(got - want))))
    elapsed = time.perf_counter() - start
    acceptance(5, "Hadamard-test oracle equality", worst <= 1e-9 and elapsed < 120,
               f"{len(p.decomposition)} terms, 20 draws, max deviation {worst:.1e} in {elapsed:.1f}s")


def test_criterion_6_algebraic_properties(acceptance):
    bad = []
    for t in sigma_terms():
        m = term_matrix(t, False)
        mh = m.conj().T
        mc = term_complement_matrix(t)
        u = term_matrix(term_completion(t))
        idem = all(np.array_equal(q @ q, q) for q in (m @ mh, mh @ m)) and np.array_equal(m @ mh @ m, m)
        orth = not any(x.any() for x in (mh @ mc, mc.conj().T @ m, m @ mc.conj().T, mc @ mh))
        unit = np.array_equal(u.conj().T @ u, np.eye(u.shape[0]))
        if not (idem and orth and unit):
            bad.append(t.tokens())
    acceptance(6, "idempotence, orthogonality, completion unitarity", not bad,
               f"155 terms exhaustive for n <= 3, violations {bad[:5]}")


def test_criterion_7_end_to_end_solve(acceptance, tmp_path):
    # The CLI defaults are this instance: n_x = n_t = 4, exact mode, local cost.
    start = time.perf_counter()
    main(["solve", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    result = json.loads((tmp_path / "result.json").read_text())
    ok = result["c_local"] < 1e-3 and result["fidelity"] > 0.99 and elapsed < 600
    acceptance(7, "4-qubit heat solve", ok,
               f"C^l {result['c_local']:.2e}, fidelity {result['fidelity']:.5f}, "
               f"{result['iterations']} iterations in {elapsed:.0f}s")


def test_criterion_8_sampling(acceptance):
    p = ProblemInstance.from_system(build_system(HeatParams(n_x=2, n_t=2)))
    v = build_ansatz(AnsatzSpec(2, 2), np.random.default_rng(8).uniform(-math.pi, math.pi, 4))
    exact = term_values_circuit(p, v, local=False)
    sampled = term_values_circuit(p, v, shots=10**6, seed=1234, local=False)
    again = term_values_circuit(p, v, shots=10**6, seed=1234, local=False)
    dev = float(np.max(np.abs(sampled.beta - exact.beta)))
    ok = dev < 5e-3 and np.array_equal(sampled.beta, again.beta)
    acceptance(8, "sampled beta within 3 sigma", ok, f"max |beta_sampled - beta_exact| = {dev:.2e} at 10^6 shots")
