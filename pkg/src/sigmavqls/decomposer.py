"""Sigma-basis decompositions of the heat-equation system, and Pauli decompositions.

The heat system on ``s + t`` qubits (``n_x = 2**s`` spatial points, ``n_t = 2**t``
time steps) is ``A = A1 - r * A2`` with ``r = diffusivity * dt / dx**2``.  Time
qubits come first (most significant), spatial qubits last.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .sigma_core import Decomposition, SigmaFactor, TensorTerm

if TYPE_CHECKING:
    from .heat_problem import HeatParams

I, P, M = SigmaFactor.IDENTITY, SigmaFactor.PLUS, SigmaFactor.MINUS
PM, MP = SigmaFactor.PLUS_MINUS, SigmaFactor.MINUS_PLUS

PAULI_LABELS = ("I", "X", "Y", "Z")

#: Coefficients with magnitude at or below this are treated as zero.
DEFAULT_PRUNE_TOL = 1e-10


class BoundaryKind(enum.Enum):
    NEUMANN = "neumann"
    ROBIN = "robin"


@dataclass(frozen=True)
class BoundarySpec:
    kind: BoundaryKind = BoundaryKind.NEUMANN
    w1: float = 0.0
    w2: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", BoundaryKind(self.kind))

    @classmethod
    def neumann(cls) -> BoundarySpec:
        return cls(BoundaryKind.NEUMANN)

    @classmethod
    def robin(cls, w1: float, w2: float) -> BoundarySpec:
        return cls(BoundaryKind.ROBIN, float(w1), float(w2))

    def corner_value(self, dx: float) -> float:
        """Weight of the two corner projector terms of the spatial operator."""
        if self.kind is BoundaryKind.NEUMANN:
            return 1.0
        denom = self.w1 * dx + self.w2
        if denom == 0:
            raise ValueError("Robin boundary requires w1*dx + w2 != 0")
        return self.w2 / denom


def _check_positive(name: str, value: int, minimum: int) -> None:
    if not isinstance(value, (int, np.integer)) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")


def decompose_A1(t: int, s: int) -> Decomposition:
    """Block lower-bidiagonal time-stepping matrix ``[[I,0],[-I,I],...]``.

    Produces ``t + 1`` terms on ``s + t`` qubits.
    """
    _check_positive("t", t, 1)
    _check_positive("s", s, 0)
    space = (I,) * s
    terms = [TensorTerm(1.0, (I,) + space), TensorTerm(-1.0, (M,) + space)]
    for level in range(2, t + 1):
        terms = [TensorTerm(x.coefficient, (I,) + x.factors) for x in terms]
        # sigma_- (x) D, where D = -(sigma_+)^{level-1} (x) I_{n_x}
        terms.append(TensorTerm(-1.0, (M,) + (P,) * (level - 1) + space))
    return Decomposition(s + t, tuple(terms))


def decompose_Aprime(
    s: int, bc: BoundarySpec | None = None, dx: float = 1.0
) -> Decomposition:
    """Spatial operator: tridiagonal(1, -2, 1) plus two corner corrections.

    Produces ``2 s + 3`` terms on ``s`` qubits.
    """
    _check_positive("s", s, 1)
    bc = bc or BoundarySpec.neumann()
    corner = bc.corner_value(dx)
    terms = [TensorTerm(-2.0, (I,)), TensorTerm(1.0, (M,)), TensorTerm(1.0, (P,))]
    for level in range(2, s + 1):
        terms = [TensorTerm(x.coefficient, (I,) + x.factors) for x in terms]
        terms.append(TensorTerm(1.0, (M,) + (P,) * (level - 1)))
        terms.append(TensorTerm(1.0, (P,) + (M,) * (level - 1)))
    terms.append(TensorTerm(corner, (PM,) * s))
    terms.append(TensorTerm(corner, (MP,) * s))
    return Decomposition(s, tuple(terms))


def decompose_A2(
    t: int, s: int, bc: BoundarySpec | None = None, dx: float = 1.0
) -> Decomposition:
    """``I^{(x)t} (x) A' - (sigma_+ sigma_-)^{(x)t} (x) A'``: zero first block, A' elsewhere."""
    _check_positive("t", t, 1)
    aprime = decompose_Aprime(s, bc, dx)
    first = [TensorTerm(x.coefficient, (I,) * t + x.factors) for x in aprime]
    second = [TensorTerm(-x.coefficient, (PM,) * t + x.factors) for x in aprime]
    return Decomposition(s + t, tuple(first + second))


def _log2_exact(n: int, name: str) -> int:
    if not isinstance(n, (int, np.integer)) or n < 2 or n & (n - 1):
        raise ValueError(f"{name} must be a power of two >= 2, got {n!r}")
    return int(n).bit_length() - 1


def diffusion_number(params: HeatParams) -> float:
    return params.diffusivity * params.dt / params.dx**2


def decompose_heat(params: HeatParams) -> Decomposition:
    """Concatenate the A1 and scaled A2 decompositions (no merging)."""
    s = _log2_exact(params.n_x, "n_x")
    t = _log2_exact(params.n_t, "n_t")
    a1 = decompose_A1(t, s)
    a2 = decompose_A2(t, s, params.bc, params.dx)
    return a1 + a2.scaled(-diffusion_number(params))


def heat_closed_form_count(n_x: int, n_t: int) -> int:
    """Raw term count ``(log2 n_t + 1) + (4 log2 n_x + 6)`` of :func:`decompose_heat`."""
    s = _log2_exact(n_x, "n_x")
    t = _log2_exact(n_t, "n_t")
    return (t + 1) + (4 * s + 6)


# -- Pauli basis ---------------------------------------------------------------


@dataclass(frozen=True)
class PauliDecomposition:
    num_qubits: int
    terms: tuple[tuple[complex, str], ...]
    prune_tol: float = DEFAULT_PRUNE_TOL

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def count(self) -> int:
        return len(self.terms)

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.num_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for c, label in self.terms:
            out += c * pauli_string_matrix(label)
        return out


_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string_matrix(label: str) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for ch in label:
        out = np.kron(out, _PAULI_MATS[ch])
    return out


def _num_qubits_of(m: np.ndarray) -> int:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    dim = m.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def pauli_coefficients(m: np.ndarray) -> np.ndarray:
    """All ``4**n`` coefficients ``Tr(P^dagger m) / 2**n`` by recursive block splitting.

    Each level splits every block into its 2x2 quadrants and recombines them in
    the I, X, Y, Z directions.  Output index is base-4 with the first qubit
    most significant (I=0, X=1, Y=2, Z=3).
    """
    n = _num_qubits_of(m)
    blocks = np.asarray(m, dtype=complex)[None, :, :]
    for _ in range(n):
        h = blocks.shape[1] // 2
        a, b = blocks[:, :h, :h], blocks[:, :h, h:]
        c, d = blocks[:, h:, :h], blocks[:, h:, h:]
        split = np.stack([(a + d) / 2, (b + c) / 2, 1j * (b - c) / 2, (a - d) / 2], axis=1)
        blocks = split.reshape(-1, h, h)
    return blocks.reshape(-1)


def pauli_decompose(m: np.ndarray, prune_tol: float = DEFAULT_PRUNE_TOL) -> PauliDecomposition:
    n = _num_qubits_of(m)
    coeffs = pauli_coefficients(m)
    labels = ("".join(p) for p in itertools.product(PAULI_LABELS, repeat=n))
    terms = tuple((complex(c), lab) for c, lab in zip(coeffs, labels) if abs(c) > prune_tol)
    return PauliDecomposition(n, terms, prune_tol)


def pauli_decompose_naive(m: np.ndarray, prune_tol: float = DEFAULT_PRUNE_TOL) -> PauliDecomposition:
    """Reference path: explicit trace against every Pauli string."""
    n = _num_qubits_of(m)
    m = np.asarray(m, dtype=complex)
    dim = 2**n
    terms = []
    for p in itertools.product(PAULI_LABELS, repeat=n):
        label = "".join(p)
        c = np.trace(pauli_string_matrix(label).conj().T @ m) / dim
        if abs(c) > prune_tol:
            terms.append((complex(c), label))
    return PauliDecomposition(n, tuple(terms), prune_tol)
