"""Exact statevector simulation and two-ancilla Hadamard-test readout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .circuit import Circuit

#: Default ceiling on register width for statevector runs.
MAX_QUBITS = 26


@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.num_qubits:
            raise ValueError(f"{amps.size} amplitudes for {self.num_qubits} qubits")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, num_qubits: int) -> StateVector:
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_vector(cls, v) -> StateVector:
        v = np.asarray(v, dtype=complex).reshape(-1)
        n = v.size.bit_length() - 1
        if v.size != 2**n:
            raise ValueError(f"length {v.size} is not a power of two")
        return cls(n, v / np.linalg.norm(v))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class AncillaDistribution:
    """Marginal distribution over ``(a0, a1)``; ``p01`` means ``a0=0, a1=1``."""

    p00: float
    p01: float
    p10: float
    p11: float
    shots: int = 0
    seed: int | None = None
    counts: tuple[int, int, int, int] | None = None

    @property
    def exact(self) -> bool:
        return self.shots == 0

    def as_array(self) -> np.ndarray:
        return np.array([self.p00, self.p01, self.p10, self.p11])


def run(
    c: Circuit,
    initial: StateVector | None = None,
    max_qubits: int = MAX_QUBITS,
    check_norm: bool = False,
) -> StateVector:
    n = c.num_qubits
    if n > max_qubits:
        raise ValueError(f"{n} qubits exceeds the simulator limit of {max_qubits}")
    if initial is None:
        psi = np.zeros((2,) * n, dtype=complex)
        psi[(0,) * n] = 1.0
    else:
        if initial.num_qubits != n:
            raise ValueError(f"initial state has {initial.num_qubits} qubits, circuit has {n}")
        psi = np.array(initial.amplitudes, dtype=complex).reshape((2,) * n)
    for g in c.gates:
        _kernels.apply_gate(psi, g, n)
        if check_norm and abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise FloatingPointError(f"norm drift after {g.to_text()}")
    return StateVector(n, psi.reshape(-1))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ancilla_distribution(
    s: StateVector, a0: int = 0, a1: int = 1, shots: int = 0, seed=None
) -> AncillaDistribution:
    """Exact marginals when ``shots == 0``; multinomial sample otherwise.

    ``seed`` may be an int, ``None`` or an existing ``numpy`` Generator.
    """
    n = s.num_qubits
    for q in (a0, a1):
        if not 0 <= q < n:
            raise ValueError(f"ancilla index {q} outside a {n}-qubit state")
    if a0 == a1:
        raise ValueError("ancilla indices must differ")
    if shots < 0:
        raise ValueError("shots must be non-negative")
    probs = np.abs(s.amplitudes.reshape((2,) * n)) ** 2
    others = tuple(q for q in range(n) if q not in (a0, a1))
    marg = probs.sum(axis=others)
    if a0 > a1:
        marg = marg.T
    p = marg.reshape(-1)
    p = p / p.sum()
    if shots == 0:
        return AncillaDistribution(*map(float, p))
    counts = _rng(seed).multinomial(shots, p)
    freq = counts / shots
    return AncillaDistribution(
        *map(float, freq),
        shots=shots,
        seed=seed if isinstance(seed, (int, np.integer)) else None,
        counts=tuple(int(x) for x in counts),
    )


def estimate(c: Circuit, shots: int = 0, seed=None) -> float:
    """``P01 - P11`` of a Hadamard-test circuit with the ``a0, a1, q...`` layout."""
    a0, a1 = c.layout.get("a0"), c.layout.get("a1")
    if a0 is None or a1 is None:
        raise ValueError("circuit layout lacks a0/a1 ancillas")
    dist = ancilla_distribution(run(c), a0, a1, shots, seed)
    return dist.p01 - dist.p11
