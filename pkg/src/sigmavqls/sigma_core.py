"""Sigma-basis factor algebra and tensor-product terms.

A term is ``coefficient * f_1 (x) f_2 (x) ... (x) f_n`` where factor ``f_1`` sits in
the most significant Kronecker slot (qubit ``q0``).  Matrices are plain numpy
complex arrays.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

#: Largest register (in qubits) for which dense realizations are built.
ORACLE_LIMIT = 12


class OracleLimitError(ValueError):
    """Raised when a dense realization would exceed the configured qubit limit."""


class SigmaFactor(enum.Enum):
    IDENTITY = "I"
    PLUS = "P"
    MINUS = "M"
    PLUS_MINUS = "PM"
    MINUS_PLUS = "MP"
    PAULI_X = "X"
    PAULI_Y = "Y"
    PAULI_Z = "Z"

    @property
    def token(self) -> str:
        return self.value

    @classmethod
    def from_token(cls, token: str) -> SigmaFactor:
        try:
            return cls(token.upper())
        except ValueError:
            raise ValueError(f"unknown factor token {token!r}") from None

    @property
    def is_pauli(self) -> bool:
        return self in _PAULI_KINDS

    @property
    def is_diagonal(self) -> bool:
        return self in (SigmaFactor.IDENTITY, SigmaFactor.PLUS_MINUS, SigmaFactor.MINUS_PLUS)


_PAULI_KINDS = frozenset({SigmaFactor.PAULI_X, SigmaFactor.PAULI_Y, SigmaFactor.PAULI_Z})
SIGMA_KINDS = (
    SigmaFactor.IDENTITY,
    SigmaFactor.PLUS,
    SigmaFactor.MINUS,
    SigmaFactor.PLUS_MINUS,
    SigmaFactor.MINUS_PLUS,
)

_MATRICES = {
    SigmaFactor.IDENTITY: ((1, 0), (0, 1)),
    SigmaFactor.PLUS: ((0, 1), (0, 0)),
    SigmaFactor.MINUS: ((0, 0), (1, 0)),
    SigmaFactor.PLUS_MINUS: ((1, 0), (0, 0)),
    SigmaFactor.MINUS_PLUS: ((0, 0), (0, 1)),
    SigmaFactor.PAULI_X: ((0, 1), (1, 0)),
    SigmaFactor.PAULI_Y: ((0, -1j), (1j, 0)),
    SigmaFactor.PAULI_Z: ((1, 0), (0, -1)),
}

_COMPLETION = {
    SigmaFactor.IDENTITY: SigmaFactor.IDENTITY,
    SigmaFactor.PLUS: SigmaFactor.PAULI_X,
    SigmaFactor.MINUS: SigmaFactor.PAULI_X,
    SigmaFactor.PLUS_MINUS: SigmaFactor.IDENTITY,
    SigmaFactor.MINUS_PLUS: SigmaFactor.IDENTITY,
    SigmaFactor.PAULI_X: SigmaFactor.PAULI_X,
    SigmaFactor.PAULI_Y: SigmaFactor.PAULI_Y,
    SigmaFactor.PAULI_Z: SigmaFactor.PAULI_Z,
}


def factor_matrix(f: SigmaFactor) -> np.ndarray:
    """Return the 2x2 realization of a factor."""
    return np.array(_MATRICES[f], dtype=complex)


def factor_completion(f: SigmaFactor) -> SigmaFactor:
    """Unitary completion: sigma_+/- -> X, projectors and I -> I, Paulis -> themselves."""
    return _COMPLETION[f]


def factor_complement(f: SigmaFactor) -> np.ndarray:
    return factor_matrix(factor_completion(f)) - factor_matrix(f)


def _check_limit(n: int, limit: int | None) -> None:
    limit = ORACLE_LIMIT if limit is None else limit
    if n > limit:
        raise OracleLimitError(f"{n} qubits exceeds the dense oracle limit of {limit}")


def _kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats, np.ones((1, 1), dtype=complex))


@dataclass(frozen=True)
class TensorTerm:
    coefficient: complex
    factors: tuple[SigmaFactor, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        if not self.factors:
            raise ValueError("a term needs at least one factor")

    @classmethod
    def from_tokens(cls, coefficient: complex, tokens: Iterable[str] | str) -> TensorTerm:
        if isinstance(tokens, str):
            tokens = tokens.split()
        return cls(coefficient, tuple(SigmaFactor.from_token(t) for t in tokens))

    @property
    def num_qubits(self) -> int:
        return len(self.factors)

    @property
    def is_sigma_only(self) -> bool:
        return not any(f.is_pauli for f in self.factors)

    def tokens(self) -> str:
        return " ".join(f.token for f in self.factors)

    def scaled(self, factor: complex) -> TensorTerm:
        return TensorTerm(self.coefficient * factor, self.factors)

    def __str__(self) -> str:
        return format_term(self)


@dataclass(frozen=True)
class Decomposition:
    """A matrix written as ``sum_l coefficient_l * A_l``."""

    num_qubits: int
    terms: tuple[TensorTerm, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        for t in self.terms:
            if t.num_qubits != self.num_qubits:
                raise ValueError(
                    f"term {t.tokens()!r} has {t.num_qubits} factors, expected {self.num_qubits}"
                )

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=complex)

    def scaled(self, factor: complex) -> Decomposition:
        return Decomposition(self.num_qubits, tuple(t.scaled(factor) for t in self.terms))

    def __add__(self, other: Decomposition) -> Decomposition:
        if other.num_qubits != self.num_qubits:
            raise ValueError("cannot concatenate decompositions of different widths")
        return Decomposition(self.num_qubits, self.terms + other.terms)

    def merged(self, tol: float = 1e-14) -> Decomposition:
        """Sum coefficients of terms with identical factor lists; drop vanishing ones.

        First-appearance order is kept.
        """
        acc: dict[tuple[SigmaFactor, ...], complex] = {}
        for t in self.terms:
            acc[t.factors] = acc.get(t.factors, 0j) + t.coefficient
        terms = tuple(TensorTerm(c, f) for f, c in acc.items() if abs(c) > tol)
        return Decomposition(self.num_qubits, terms)


def term_matrix(
    t: TensorTerm, include_coefficient: bool = True, limit: int | None = None
) -> np.ndarray:
    _check_limit(t.num_qubits, limit)
    m = _kron_all(factor_matrix(f) for f in t.factors)
    return t.coefficient * m if include_coefficient else m


def term_completion(t: TensorTerm) -> TensorTerm:
    return TensorTerm(1.0, tuple(factor_completion(f) for f in t.factors))


def term_complement_matrix(t: TensorTerm, limit: int | None = None) -> np.ndarray:
    """Dense ``completion(A_l) - A_l``; the coefficient is ignored."""
    _check_limit(t.num_qubits, limit)
    return term_matrix(term_completion(t), False, limit) - term_matrix(t, False, limit)


def decomposition_matrix(d: Decomposition, limit: int | None = None) -> np.ndarray:
    _check_limit(d.num_qubits, limit)
    dim = 2**d.num_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for t in d.terms:
        out += term_matrix(t, True, limit)
    return out


# -- term-list text format ---------------------------------------------------
#
#   <coeff_re> <coeff_im> : <f1> <f2> ... <fn>
#
# Blank lines and lines starting with '#' are ignored.


def format_term(t: TensorTerm) -> str:
    c = t.coefficient
    return f"{c.real!r} {c.imag!r} : {t.tokens()}"


def format_terms(d: Decomposition | Sequence[TensorTerm]) -> str:
    terms = d.terms if isinstance(d, Decomposition) else d
    return "".join(format_term(t) + "\n" for t in terms)


def parse_term(line: str) -> TensorTerm:
    head, sep, tail = line.partition(":")
    if not sep:
        raise ValueError(f"missing ':' separator in term line {line!r}")
    parts = head.split()
    if len(parts) != 2:
        raise ValueError(f"expected '<re> <im>' before ':' in {line!r}")
    re_, im_ = (float(p) for p in parts)
    return TensorTerm.from_tokens(complex(re_, im_), tail)


def parse_terms(text: str) -> Decomposition:
    terms = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        terms.append(parse_term(line))
    if not terms:
        raise ValueError("no terms found")
    return Decomposition(terms[0].num_qubits, tuple(terms))
