"""Global and local VQLS cost functions over a sigma-basis decomposition.

Term values follow the conventions

* ``beta[i, j]     = <psi| A_j^+ A_i |psi>``
* ``overlaps[l]    = <b| A_l |psi>``, so ``gamma[i, j] = overlaps[i] * conj(overlaps[j])``
* ``delta[k, i, j] = <psi| A_j^+ U Z_{k+1} U^+ A_i |psi>``

with ``|psi> = V(theta)|0>`` and ``|b> = U|0>``.  They can be obtained from
Hadamard-test circuits (``evaluator="circuit"``, exact or sampled) or directly
from the statevector (``evaluator="statevector"``, exact only).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from . import _kernels
from .circuit import CLOSED, OPEN, Circuit, Gate, GateKind, beta_circuit, delta_circuit, gamma_circuit
from .sigma_core import Decomposition, TensorTerm, factor_matrix
from .simulator import StateVector, estimate, run

log = logging.getLogger(__name__)

ENTANGLERS = ("cz", "cnot")
METHODS = ("nelder-mead", "spsa")
EVALUATORS = ("auto", "circuit", "statevector")


# -- ansatz and state preparation --------------------------------------------


@dataclass(frozen=True)
class AnsatzSpec:
    """Hardware-efficient ansatz: ``num_layers`` x (Ry on every qubit, then an entangling chain).

    Parameters are laid out layer-major: ``theta[layer * n + qubit]``.
    """

    num_qubits: int
    num_layers: int = 1
    entangler: str = "cz"
    parameters: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.num_qubits < 1 or self.num_layers < 1:
            raise ValueError("num_qubits and num_layers must be positive")
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"entangler must be one of {ENTANGLERS}")
        if self.parameters is not None:
            params = tuple(float(x) for x in self.parameters)
            if len(params) != self.num_parameters:
                raise ValueError(f"expected {self.num_parameters} parameters, got {len(params)}")
            object.__setattr__(self, "parameters", params)

    @property
    def num_parameters(self) -> int:
        return self.num_qubits * self.num_layers

    def with_parameters(self, theta: Sequence[float]) -> AnsatzSpec:
        return replace(self, parameters=tuple(float(x) for x in theta))


def build_ansatz(spec: AnsatzSpec, theta: Sequence[float] | None = None) -> Circuit:
    theta = spec.parameters if theta is None else theta
    if theta is None:
        raise ValueError("no parameters given")
    theta = np.asarray(theta, dtype=float)
    if theta.size != spec.num_parameters:
        raise ValueError(f"expected {spec.num_parameters} parameters, got {theta.size}")
    n = spec.num_qubits
    gates = []
    for layer in range(spec.num_layers):
        for q in range(n):
            gates.append(Gate(GateKind.RY, q, (), float(theta[layer * n + q])))
        for q in range(n - 1):
            if spec.entangler == "cz":
                gates.append(Gate(GateKind.Z, q + 1, ((q, CLOSED),)))
            else:
                gates.append(Gate(GateKind.MCX, q + 1, ((q, CLOSED),)))
    return Circuit(n, tuple(gates))


def amplitude_encode(v: Sequence[float] | np.ndarray) -> Circuit:
    """State preparation ``U|0...0> = v / |v|`` for a real vector of length ``2**n``.

    A binary tree of multiplexed Ry rotations: qubit ``l`` is rotated by the
    ratio of subtree norms, controlled on the prefix bits of qubits ``0..l-1``.
    Signs are absorbed by the last level, whose angles use the signed leaf
    amplitudes.  Zero rotations are omitted.
    """
    v = np.asarray(v)
    if np.iscomplexobj(v):
        if np.any(np.abs(v.imag) > 0):
            raise ValueError("amplitude_encode supports real vectors only")
        v = v.real
    v = v.astype(float).reshape(-1)
    n = v.size.bit_length() - 1
    if v.size < 2 or v.size != 2**n:
        raise ValueError(f"length {v.size} is not a power of two >= 2")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("cannot encode the zero vector")
    v = v / norm
    gates = []
    for level in range(n):
        blocks = v.reshape(2**level, 2, -1)
        for prefix in range(2**level):
            left, right = blocks[prefix, 0], blocks[prefix, 1]
            if level == n - 1:
                angle = 2.0 * math.atan2(right[0], left[0])
            else:
                angle = 2.0 * math.atan2(np.linalg.norm(right), np.linalg.norm(left))
            if angle == 0.0:
                continue
            ctrls = tuple((q, bool((prefix >> (level - 1 - q)) & 1)) for q in range(level))
            gates.append(Gate(GateKind.RY, level, ctrls, angle))
    return Circuit(n, tuple(gates))


# -- problem and cost report ---------------------------------------------------


@dataclass(frozen=True)
class ProblemInstance:
    """``A = sum_l coefficient_l A_l`` with a unit right-hand side ``b`` and its preparation."""

    decomposition: Decomposition
    b_prep: Circuit
    b_vector: np.ndarray
    b_scale: float = 1.0

    def __post_init__(self) -> None:
        b = np.asarray(self.b_vector, dtype=complex).reshape(-1)
        if b.size != 2**self.num_qubits:
            raise ValueError("b_vector length does not match the decomposition width")
        if abs(np.linalg.norm(b) - 1.0) > 1e-10:
            raise ValueError("b_vector must be normalized")
        if self.b_prep.num_qubits != self.num_qubits:
            raise ValueError("b_prep width does not match the decomposition width")
        object.__setattr__(self, "b_vector", b)

    @property
    def num_qubits(self) -> int:
        return self.decomposition.num_qubits

    @classmethod
    def from_vector(cls, decomposition: Decomposition, b: Sequence[float] | np.ndarray) -> ProblemInstance:
        b = np.asarray(b, dtype=float)
        scale = float(np.linalg.norm(b))
        if scale == 0:
            raise ValueError("right-hand side is zero")
        return cls(decomposition, amplitude_encode(b), b / scale, scale)

    @classmethod
    def from_system(cls, system) -> ProblemInstance:
        return cls.from_vector(system.decomposition, system.b)


@dataclass(frozen=True)
class CostReport:
    theta: tuple[float, ...]
    phi_norm_sq: float
    overlap_sq: float
    sigma_k: tuple[float, ...]
    c_global: float
    c_local: float

    @property
    def c_global_unnormalized(self) -> float:
        return self.phi_norm_sq - self.overlap_sq

    @property
    def c_local_unnormalized(self) -> float:
        return self.phi_norm_sq - float(np.mean(self.sigma_k))

    def cost(self, kind: str) -> float:
        return self.c_local if kind == "local" else self.c_global


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "nelder-mead"
    max_iters: int = 5000
    cost_tolerance: float = 1e-8
    seed: int = 0
    shots: int = 0
    cost_kind: str = "global"
    evaluator: str = "auto"
    init_scale: float = math.pi
    spsa_a: float = 0.2
    spsa_c: float = 0.1

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.cost_kind not in ("global", "local"):
            raise ValueError("cost_kind must be 'global' or 'local'")
        if self.evaluator not in EVALUATORS:
            raise ValueError(f"evaluator must be one of {EVALUATORS}")
        if self.max_iters <= 0 or self.cost_tolerance <= 0:
            raise ValueError("max_iters and cost_tolerance must be positive")
        if self.shots < 0:
            raise ValueError("shots must be non-negative")

    def resolved_evaluator(self) -> str:
        if self.evaluator != "auto":
            if self.evaluator == "statevector" and self.shots:
                raise ValueError("the statevector evaluator is exact; use the circuit evaluator for shots")
            return self.evaluator
        return "circuit" if self.shots else "statevector"


@dataclass(frozen=True)
class TermValues:
    beta: np.ndarray
    overlaps: np.ndarray
    delta: np.ndarray

    @property
    def gamma(self) -> np.ndarray:
        return np.outer(self.overlaps, self.overlaps.conj())


def apply_term(t: TensorTerm, states: np.ndarray, num_qubits: int) -> np.ndarray:
    """Apply ``A_l`` (no coefficient) to a ``(2**n, ...)`` stack of vectors."""
    batch = states.shape[1:]
    psi = states.reshape((2,) * num_qubits + batch)
    for axis, f in enumerate(t.factors):
        psi = np.moveaxis(np.tensordot(factor_matrix(f), psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(states.shape)


def _run_batch(c: Circuit, states: np.ndarray) -> np.ndarray:
    n = c.num_qubits
    psi = np.array(states, dtype=complex).reshape((2,) * n + states.shape[1:])
    for g in c.gates:
        _kernels.apply_gate(psi, g, n)
    return psi.reshape(states.shape)


def _z_signs(n: int, k: int) -> np.ndarray:
    """Diagonal of ``Z`` on system qubit ``k`` (0-based) in the 2**n basis."""
    idx = np.arange(2**n)
    return 1.0 - 2.0 * ((idx >> (n - 1 - k)) & 1)


def term_values_statevector(problem: ProblemInstance, v: Circuit) -> TermValues:
    n = problem.num_qubits
    psi = run(v).amplitudes
    w = np.stack([apply_term(t, psi, n) for t in problem.decomposition], axis=1)
    y = _run_batch(problem.b_prep.inverse(), w)
    beta = (w.conj().T @ w).T
    delta = np.stack([((y.conj().T * _z_signs(n, k)) @ y).T for k in range(n)])
    return TermValues(beta, y[0].copy(), delta)


def _hermitian_fill(nl: int, value) -> np.ndarray:
    out = np.zeros((nl, nl), dtype=complex)
    for i in range(nl):
        for j in range(i, nl):
            out[i, j] = value(i, j)
            out[j, i] = out[i, j].conjugate()
    return out


def term_values_circuit(
    problem: ProblemInstance, v: Circuit, shots: int = 0, seed=None, local: bool = True
) -> TermValues:
    """Every term value from its own Hadamard-test circuit.

    Hermitian symmetry is exploited (``i <= j`` only); diagonal entries need
    only the real-part circuit.  Sampling draws from a single generator in a
    fixed order, so a given seed reproduces the same values.
    """
    rng = np.random.default_rng(seed) if shots else None
    terms = problem.decomposition.terms
    n, nl, u = problem.num_qubits, len(terms), problem.b_prep

    def est(c: Circuit) -> float:
        return estimate(c, shots, rng)

    def pair(build):
        def value(i, j):
            re = est(build(i, j, "real"))
            if i == j:
                return complex(re)
            return complex(re, est(build(i, j, "imag")))
        return value

    beta = _hermitian_fill(nl, pair(lambda i, j, part: beta_circuit(terms[i], terms[j], v, part)))
    overlaps = np.array(
        [complex(est(gamma_circuit(t, v, u, "real")), est(gamma_circuit(t, v, u, "imag"))) for t in terms]
    )
    if local:
        delta = np.stack(
            [
                _hermitian_fill(
                    nl, pair(lambda i, j, part, k=k: delta_circuit(terms[i], terms[j], v, u, k + 1, part))
                )
                for k in range(n)
            ]
        )
    else:
        delta = np.full((n, nl, nl), np.nan, dtype=complex)
    return TermValues(beta, overlaps, delta)


def assemble_cost(coefficients: np.ndarray, values: TermValues, theta: Sequence[float]) -> CostReport:
    a = np.asarray(coefficients, dtype=complex)
    weights = np.outer(a, a.conj())  # alpha_i alpha_j^*
    phi = np.sum(weights * values.beta)
    overlap = np.sum(weights * values.gamma)
    sigma = [np.sum(weights * (values.beta + values.delta[k])) / 2 for k in range(values.delta.shape[0])]
    phi_r, overlap_r = float(phi.real), float(overlap.real)
    sigma_r = tuple(float(s.real) for s in sigma)
    c_global = 1.0 - overlap_r / phi_r
    c_local = 1.0 - float(np.mean(sigma_r)) / phi_r
    return CostReport(tuple(float(x) for x in theta), phi_r, overlap_r, sigma_r, c_global, c_local)


def cost_report(
    p: ProblemInstance,
    spec: AnsatzSpec,
    cfg: OptimizerConfig | None = None,
    *,
    evaluator: str | None = None,
    seed=None,
) -> CostReport:
    """Assemble both costs at ``spec.parameters``.

    ``evaluator`` overrides the config; the default without a config is the
    exact circuit evaluator.
    """
    cfg = cfg or OptimizerConfig(evaluator="circuit")
    ev = evaluator or cfg.resolved_evaluator()
    v = build_ansatz(spec)
    if ev == "statevector":
        if cfg.shots:
            raise ValueError("the statevector evaluator is exact; use the circuit evaluator for shots")
        values = term_values_statevector(p, v)
    else:
        values = term_values_circuit(p, v, cfg.shots, cfg.seed if seed is None else seed)
    return assemble_cost(p.decomposition.coefficients, values, spec.parameters)


# -- optimization --------------------------------------------------------------


@dataclass
class OptimizationResult:
    theta: np.ndarray
    best: CostReport
    trace: list[CostReport] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    evaluations: int = 0
    status: str = ""


class _Converged(Exception):
    pass


class _BudgetExhausted(Exception):
    pass


class _Objective:
    """Caches reports by parameter vector and tracks the best point seen."""

    def __init__(self, p: ProblemInstance, spec: AnsatzSpec, cfg: OptimizerConfig, noise_seed):
        self.p, self.spec, self.cfg = p, spec, cfg
        self.evaluator = cfg.resolved_evaluator()
        self.noise = np.random.default_rng(noise_seed)
        self.cache: dict[bytes, CostReport] = {}
        self.best: CostReport | None = None
        self.evaluations = 0

    def report(self, theta: np.ndarray) -> CostReport:
        key = np.asarray(theta, dtype=float).tobytes()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        spec = self.spec.with_parameters(theta)
        v = build_ansatz(spec)
        if self.evaluator == "statevector":
            values = term_values_statevector(self.p, v)
        else:
            values = term_values_circuit(
                self.p, v, self.cfg.shots, self.noise, local=self.cfg.cost_kind == "local"
            )
        rep = assemble_cost(self.p.decomposition.coefficients, values, spec.parameters)
        self.evaluations += 1
        if len(self.cache) > 4096:
            self.cache.clear()
        self.cache[key] = rep
        if self.best is None or rep.cost(self.cfg.cost_kind) < self.best.cost(self.cfg.cost_kind):
            self.best = rep
        return rep

    def __call__(self, theta: np.ndarray) -> float:
        return self.report(theta).cost(self.cfg.cost_kind)


def _initial_theta(spec: AnsatzSpec, cfg: OptimizerConfig, rng: np.random.Generator) -> np.ndarray:
    if spec.parameters is not None:
        return np.array(spec.parameters, dtype=float)
    return rng.uniform(-cfg.init_scale, cfg.init_scale, spec.num_parameters)


def _nelder_mead(obj: _Objective, x0: np.ndarray, cfg: OptimizerConfig, result: OptimizationResult) -> None:
    tol = cfg.cost_tolerance

    def callback(xk):
        rep = obj.report(xk)
        result.trace.append(rep)
        result.iterations += 1
        if rep.cost(cfg.cost_kind) < tol:
            raise _Converged
        if result.iterations >= cfg.max_iters:
            raise _BudgetExhausted

    x = x0
    try:
        # Restart from the incumbent whenever the simplex collapses early.
        while result.iterations < cfg.max_iters:
            before = result.iterations
            res = scipy.optimize.minimize(
                obj,
                x,
                method="Nelder-Mead",
                callback=callback,
                options={
                    "maxiter": cfg.max_iters - result.iterations,
                    "xatol": 1e-10,
                    "fatol": tol * 1e-3,
                    "adaptive": True,
                },
            )
            x = np.array(obj.best.theta)
            if res.fun < tol:
                raise _Converged
            if result.iterations == before:
                break
        result.status = "max_iters reached"
    except _Converged:
        result.converged = True
        result.status = "cost below tolerance"
    except _BudgetExhausted:
        result.status = "max_iters reached"


def _spsa(
    obj: _Objective, x0: np.ndarray, cfg: OptimizerConfig, rng: np.random.Generator, result: OptimizationResult
) -> None:
    x = x0.copy()
    big_a = 0.1 * cfg.max_iters
    for k in range(cfg.max_iters):
        ak = cfg.spsa_a / (k + 1 + big_a) ** 0.602
        ck = cfg.spsa_c / (k + 1) ** 0.101
        delta = rng.choice((-1.0, 1.0), size=x.size)
        g = (obj(x + ck * delta) - obj(x - ck * delta)) / (2 * ck) * delta
        x = x - ak * g
        rep = obj.report(x)
        result.trace.append(rep)
        result.iterations = k + 1
        if rep.cost(cfg.cost_kind) < cfg.cost_tolerance:
            result.converged = True
            result.status = "cost below tolerance"
            return
    result.status = "max_iters reached"


def optimize(p: ProblemInstance, spec: AnsatzSpec, cfg: OptimizerConfig | None = None) -> OptimizationResult:
    """Minimize the configured cost; non-convergence is reported in ``status``."""
    cfg = cfg or OptimizerConfig()
    init_seq, noise_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(init_seq)
    obj = _Objective(p, spec, cfg, noise_seq)
    x0 = _initial_theta(spec, cfg, rng)
    result = OptimizationResult(theta=x0, best=obj.report(x0))
    if result.best.cost(cfg.cost_kind) < cfg.cost_tolerance:
        result.converged, result.status = True, "cost below tolerance"
    elif cfg.method == "nelder-mead":
        _nelder_mead(obj, x0, cfg, result)
    else:
        _spsa(obj, x0, cfg, rng, result)
    result.best = obj.best
    result.theta = np.array(obj.best.theta)
    result.evaluations = obj.evaluations
    log.info("optimize: %s after %d iterations, cost=%.3e", result.status, result.iterations,
             result.best.cost(cfg.cost_kind))
    return result


def extract_solution(p: ProblemInstance, spec: AnsatzSpec, theta: Sequence[float]) -> tuple[np.ndarray, complex]:
    """Return ``(x_hat, scale)`` with ``scale * x_hat`` the least-squares solution along ``x_hat``.

    ``scale`` includes the norm of the original right-hand side.
    """
    n = p.num_qubits
    x_hat = run(build_ansatz(spec, theta)).amplitudes.copy()
    ax = sum(t.coefficient * apply_term(t, x_hat, n) for t in p.decomposition)
    denom = np.vdot(ax, ax).real
    if denom <= 1e-24:
        raise ValueError("A x_hat vanishes to working precision; no scale can be recovered")
    c = np.vdot(ax, p.b_vector) / denom
    scale = c * p.b_scale
    if abs(scale.imag) < 1e-12 * max(1.0, abs(scale)):
        scale = complex(scale.real)
    return x_hat, scale


def residual(p: ProblemInstance, x: np.ndarray) -> float:
    """``|A x - b|`` against the un-normalized right-hand side."""
    n = p.num_qubits
    ax = sum(t.coefficient * apply_term(t, np.asarray(x, dtype=complex), n) for t in p.decomposition)
    return float(np.linalg.norm(ax - p.b_vector * p.b_scale))
