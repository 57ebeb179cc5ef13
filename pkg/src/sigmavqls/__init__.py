"""Sigma-basis decompositions and VQLS cost circuits for the 1-D heat equation."""

from .circuit import (
    Circuit,
    Gate,
    GateCensus,
    GateKind,
    beta_circuit,
    circuit_unitary,
    completion_circuit,
    controlled,
    delta_circuit,
    dilation_circuit,
    gamma_circuit,
    gate_census,
)
from .decomposer import (
    BoundarySpec,
    PauliDecomposition,
    decompose_A1,
    decompose_A2,
    decompose_Aprime,
    decompose_heat,
    pauli_decompose,
)
from .heat_problem import HeatParams, LinearSystem, build_system, classical_solve, fidelity
from .sigma_core import Decomposition, OracleLimitError, SigmaFactor, TensorTerm, decomposition_matrix, term_matrix
from .simulator import AncillaDistribution, StateVector, ancilla_distribution, estimate, run
from .vqls import (
    AnsatzSpec,
    CostReport,
    OptimizationResult,
    OptimizerConfig,
    ProblemInstance,
    amplitude_encode,
    build_ansatz,
    cost_report,
    extract_solution,
    optimize,
)

__all__ = [
    "AncillaDistribution",
    "AnsatzSpec",
    "BoundarySpec",
    "Circuit",
    "CostReport",
    "Decomposition",
    "Gate",
    "GateCensus",
    "GateKind",
    "HeatParams",
    "LinearSystem",
    "OptimizationResult",
    "OptimizerConfig",
    "OracleLimitError",
    "PauliDecomposition",
    "ProblemInstance",
    "SigmaFactor",
    "StateVector",
    "TensorTerm",
    "amplitude_encode",
    "ancilla_distribution",
    "beta_circuit",
    "build_ansatz",
    "build_system",
    "circuit_unitary",
    "classical_solve",
    "completion_circuit",
    "controlled",
    "cost_report",
    "decompose_A1",
    "decompose_A2",
    "decompose_Aprime",
    "decompose_heat",
    "decomposition_matrix",
    "delta_circuit",
    "dilation_circuit",
    "estimate",
    "extract_solution",
    "fidelity",
    "gamma_circuit",
    "gate_census",
    "optimize",
    "pauli_decompose",
    "run",
    "term_matrix",
]
