"""Gate-level circuits: unitary-completion and dilation synthesis, Hadamard tests.

Register conventions
--------------------
* ``completion_circuit`` / ``dilation_circuit``: ``n + 1`` qubits, ``a1`` at index
  0 (block selector) followed by ``q0 .. q_{n-1}``.
* Hadamard-test circuits: ``n + 2`` qubits laid out ``a0, a1, q0 .. q_{n-1}``.
* Qubit 0 is always the most significant bit of a basis-state index.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .sigma_core import (
    ORACLE_LIMIT,
    OracleLimitError,
    SigmaFactor,
    TensorTerm,
    factor_completion,
    factor_matrix,
    term_matrix,
)

OPEN = False
CLOSED = True


class GateKind(str, enum.Enum):
    X = "X"
    Y = "Y"
    Z = "Z"
    H = "H"
    S = "S"
    SDG = "SDG"
    RY = "RY"
    RZ = "RZ"
    MCX = "MCX"


_FIXED = {
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.MCX: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.SDG: np.array([[1, 0], [0, -1j]], dtype=complex),
}
_PARAMETRIC = (GateKind.RY, GateKind.RZ)
_SELF_INVERSE = (GateKind.X, GateKind.MCX, GateKind.Y, GateKind.Z, GateKind.H)


@dataclass(frozen=True)
class Gate:
    """Single-target gate with any number of open/closed controls.

    ``controls`` holds ``(qubit, closed)`` pairs; ``closed=True`` fires on ``|1>``.
    ``MCX`` with no controls acts as a plain X but is still counted as the
    multi-controlled gate of a synthesis.
    """

    kind: GateKind
    target: int
    controls: tuple[tuple[int, bool], ...] = ()
    angle: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GateKind(self.kind))
        ctrls = tuple((int(q), bool(c)) for q, c in self.controls)
        object.__setattr__(self, "controls", ctrls)
        qs = [q for q, _ in ctrls]
        if self.target in qs:
            raise ValueError(f"target {self.target} is also a control")
        if len(set(qs)) != len(qs):
            raise ValueError("control qubits must be distinct")
        if (self.kind in _PARAMETRIC) != (self.angle is not None):
            raise ValueError(f"{self.kind.value} angle mismatch")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) + tuple(q for q, _ in self.controls)

    @property
    def is_x_type(self) -> bool:
        return self.kind in (GateKind.X, GateKind.MCX)

    def matrix(self) -> np.ndarray:
        """2x2 action on the target (controls excluded)."""
        if self.kind is GateKind.RY:
            c, s = math.cos(self.angle / 2), math.sin(self.angle / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind is GateKind.RZ:
            ph = np.exp(-0.5j * self.angle)
            return np.array([[ph, 0], [0, ph.conjugate()]], dtype=complex)
        return _FIXED[self.kind]

    def inverse(self) -> Gate:
        if self.kind in _SELF_INVERSE:
            return self
        if self.kind is GateKind.S:
            return Gate(GateKind.SDG, self.target, self.controls)
        if self.kind is GateKind.SDG:
            return Gate(GateKind.S, self.target, self.controls)
        return Gate(self.kind, self.target, self.controls, -self.angle)

    def with_control(self, qubit: int, closed: bool = CLOSED) -> Gate:
        kind = GateKind.MCX if self.kind is GateKind.X else self.kind
        return Gate(kind, self.target, self.controls + ((qubit, closed),), self.angle)

    def remap(self, mapping: Mapping[int, int]) -> Gate:
        return Gate(
            self.kind,
            mapping[self.target],
            tuple((mapping[q], c) for q, c in self.controls),
            self.angle,
        )

    def to_text(self) -> str:
        parts = [self.kind.value, f"t={self.target}"]
        if self.angle is not None:
            parts.append(f"angle={self.angle!r}")
        if self.controls:
            ctl = ",".join(f"{q}:{'closed' if c else 'open'}" for q, c in self.controls)
            parts.append(f"c={ctl}")
        return " ".join(parts)

    @classmethod
    def from_text(cls, line: str) -> Gate:
        kind, *rest = line.split()
        target, angle, controls = None, None, []
        for tok in rest:
            key, _, val = tok.partition("=")
            if key == "t":
                target = int(val)
            elif key == "angle":
                angle = float(val)
            elif key == "c":
                for item in val.split(","):
                    q, _, pol = item.partition(":")
                    if pol not in ("open", "closed"):
                        raise ValueError(f"bad control polarity {pol!r}")
                    controls.append((int(q), pol == "closed"))
            else:
                raise ValueError(f"unknown gate field {tok!r}")
        if target is None:
            raise ValueError(f"gate line without target: {line!r}")
        return cls(GateKind(kind.upper()), target, tuple(controls), angle)


def q_layout(n: int, offset: int = 0) -> dict[str, int]:
    return {f"q{p}": p + offset for p in range(n)}


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()
    layout: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "layout", dict(self.layout) or q_layout(self.num_qubits))
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.num_qubits:
                    raise ValueError(f"gate {g.to_text()!r} touches qubit {q} outside the register")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: Circuit) -> Circuit:
        if other.num_qubits != self.num_qubits:
            raise ValueError("register width mismatch")
        return Circuit(self.num_qubits, self.gates + other.gates, self.layout)

    def with_gates(self, gates: Iterable[Gate]) -> Circuit:
        return Circuit(self.num_qubits, self.gates + tuple(gates), self.layout)

    def used_qubits(self) -> set[int]:
        return {q for g in self.gates for q in g.qubits}

    def inverse(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(g.inverse() for g in reversed(self.gates)), self.layout)

    def embed(self, mapping: Mapping[int, int] | Sequence[int], num_qubits: int) -> Circuit:
        """Relabel qubits into a wider register (layout is dropped)."""
        if not isinstance(mapping, Mapping):
            mapping = dict(enumerate(mapping))
        return Circuit(num_qubits, tuple(g.remap(mapping) for g in self.gates))

    def dump(self) -> str:
        lay = " ".join(f"{k}={v}" for k, v in self.layout.items())
        lines = [f"# qubits={self.num_qubits}", f"# layout {lay}"]
        lines += [g.to_text() for g in self.gates]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> Circuit:
        num_qubits, layout, gates = None, {}, []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("# qubits="):
                num_qubits = int(line.split("=", 1)[1])
            elif line.startswith("# layout"):
                for tok in line[len("# layout"):].split():
                    k, _, v = tok.partition("=")
                    layout[k] = int(v)
            elif line.startswith("#"):
                continue
            else:
                gates.append(Gate.from_text(line))
        if num_qubits is None:
            raise ValueError("missing '# qubits=' header")
        return cls(num_qubits, tuple(gates), layout)


@dataclass(frozen=True)
class GateCensus:
    counts: dict[str, int]
    mcx_by_arity: dict[int, int]
    single_qubit: int
    depth: int
    total: int

    @property
    def mcx(self) -> int:
        return sum(self.mcx_by_arity.values())


def gate_census(c: Circuit) -> GateCensus:
    counts: Counter[str] = Counter()
    arity: Counter[int] = Counter()
    single = 0
    level = [0] * c.num_qubits
    depth = 0
    for g in c.gates:
        counts[g.kind.value] += 1
        if g.kind is GateKind.MCX or (g.is_x_type and g.controls):
            arity[len(g.controls)] += 1
        elif not g.controls:
            single += 1
        layer = 1 + max(level[q] for q in g.qubits)
        for q in g.qubits:
            level[q] = layer
        depth = max(depth, layer)
    return GateCensus(dict(counts), dict(arity), single, depth, len(c.gates))


def controlled(c: Circuit, ctrl: int, closed: bool = CLOSED) -> Circuit:
    """Add one control to every gate of ``c``."""
    if not 0 <= ctrl < c.num_qubits:
        raise ValueError(f"control {ctrl} outside the register")
    if ctrl in c.used_qubits():
        raise ValueError(f"control qubit {ctrl} is already used by the circuit")
    return Circuit(c.num_qubits, tuple(g.with_control(ctrl, closed) for g in c.gates), c.layout)


def circuit_unitary(c: Circuit, limit: int = ORACLE_LIMIT) -> np.ndarray:
    """Dense unitary, built by pushing every basis column through the gates."""
    if c.num_qubits > limit:
        raise OracleLimitError(f"{c.num_qubits} qubits exceeds the dense oracle limit of {limit}")
    n = c.num_qubits
    dim = 2**n
    psi = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in c.gates:
        _kernels.apply_gate(psi, g, n)
    return psi.reshape(dim, dim)


# -- unitary completion (single multi-controlled X) ---------------------------

_SINGLE_QUBIT_FOR = {
    SigmaFactor.PAULI_X: GateKind.X,
    SigmaFactor.PAULI_Y: GateKind.Y,
    SigmaFactor.PAULI_Z: GateKind.Z,
}


def _projector_control(f: SigmaFactor) -> bool | None:
    """Control polarity selecting the support of ``f f^dagger`` (None: no control)."""
    m = factor_matrix(f)
    proj = m @ m.conj().T
    d0, d1 = abs(proj[0, 0]) > 0.5, abs(proj[1, 1]) > 0.5
    if d0 and d1:
        return None
    return CLOSED if d1 else OPEN


def completion_layout(n: int) -> dict[str, int]:
    return {"a1": 0, **q_layout(n, offset=1)}


def completion_circuit(t: TensorTerm) -> Circuit:
    """``U_l = [[A^c, A], [A, A^c]]`` with ``a1`` as block selector.

    The completion ``I (x) completion(A)`` comes first as single-qubit gates,
    then one multi-controlled X on ``a1`` flips it on the support of ``A A^dagger``.
    """
    n = t.num_qubits
    gates = []
    for p, f in enumerate(t.factors):
        kind = _SINGLE_QUBIT_FOR.get(factor_completion(f))
        if kind is not None:
            gates.append(Gate(kind, p + 1))
    controls = []
    for p, f in enumerate(t.factors):
        pol = _projector_control(f)
        if pol is not None:
            controls.append((p + 1, pol))
    gates.append(Gate(GateKind.MCX, 0, tuple(controls)))
    return Circuit(n + 1, tuple(gates), completion_layout(n))


def completion_block_matrix(t: TensorTerm) -> np.ndarray:
    """Dense ``[[A^c, A], [A, A^c]]`` from the factor realizations."""
    a = term_matrix(t, include_coefficient=False)
    ac = term_matrix(TensorTerm(1.0, tuple(factor_completion(f) for f in t.factors)), False) - a
    return np.block([[ac, a], [a, ac]])


# -- dilation (permutation synthesis) -----------------------------------------


def dilation_matrix(t: TensorTerm) -> np.ndarray:
    """Sign-dropped dilation ``[[A, I - A A^T], [I - A^T A, A^T]]``."""
    if not t.is_sigma_only:
        raise ValueError("dilation synthesis is defined for sigma-basis factors only")
    a = term_matrix(t, include_coefficient=False)
    eye = np.eye(a.shape[0])
    ah = a.conj().T
    return np.block([[a, eye - a @ ah], [eye - ah @ a, ah]])


def _bits(x: int, m: int) -> list[int]:
    return [(x >> (m - 1 - q)) & 1 for q in range(m)]


def _transposition_gates(x: int, y: int, m: int) -> list[Gate]:
    """Swap basis states ``x`` and ``y`` of an ``m``-qubit register via a Gray-code walk.

    Uses ``2d - 1`` fully controlled X gates for Hamming distance ``d``.  The
    walk starts from the endpoint with qubit 0 set and flips qubit 0 last.
    """
    bx = _bits(x, m)
    if not bx[0] and _bits(y, m)[0]:
        x, y = y, x
    diff = [q for q in range(m) if (x ^ y) >> (m - 1 - q) & 1]
    order = sorted((q for q in diff if q != 0), reverse=True) + [q for q in diff if q == 0]
    walk: list[Gate] = []
    cur = x
    for q in order:
        bits = _bits(cur, m)
        ctrls = tuple((c, bool(bits[c])) for c in range(m) if c != q)
        walk.append(Gate(GateKind.MCX, q, ctrls))
        cur ^= 1 << (m - 1 - q)
    return walk + walk[-2::-1]


def _synthesize_permutation(perm: Sequence[int], m: int) -> list[Gate]:
    """Gates realizing ``|j> -> |perm[j]>`` as a product of transpositions."""
    seen = [False] * len(perm)
    gates: list[Gate] = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        cycle = [start]
        seen[start] = True
        j = perm[start]
        while j != start:
            cycle.append(j)
            seen[j] = True
            j = perm[j]
        for other in cycle[1:]:
            gates += _transposition_gates(cycle[0], other, m)
    return gates


def dilation_circuit(t: TensorTerm) -> Circuit:
    """Circuit for the sign-dropped dilation: an X on ``a1`` then MCX row permutations.

    Identity slots are factored out (they never need a control).  Diagonal
    projector terms reduce to the single completion MCX; terms with sigma_+/-
    factors go through Gray-code permutation synthesis.
    """
    if not t.is_sigma_only:
        raise ValueError("dilation synthesis is defined for sigma-basis factors only")
    n = t.num_qubits
    gates = [Gate(GateKind.X, 0)]
    active = [p for p, f in enumerate(t.factors) if f is not SigmaFactor.IDENTITY]
    reduced = TensorTerm(1.0, tuple(t.factors[p] for p in active)) if active else None

    if reduced is None or all(f.is_diagonal for f in reduced.factors):
        ctrls = tuple(
            (p + 1, pol)
            for p, f in enumerate(t.factors)
            if (pol := _projector_control(f)) is not None
        )
        gates.append(Gate(GateKind.MCX, 0, ctrls))
    else:
        m = len(active) + 1
        u = dilation_matrix(reduced).real
        x_first = np.kron(np.array([[0, 1], [1, 0]]), np.eye(2 ** (m - 1)))
        rest = u @ x_first  # u = rest @ (X (x) I)
        perm = [int(np.argmax(rest[:, j])) for j in range(rest.shape[1])]
        back = {0: 0, **{i + 1: p + 1 for i, p in enumerate(active)}}
        gates += [g.remap(back) for g in _synthesize_permutation(perm, m)]
    return Circuit(n + 1, tuple(gates), completion_layout(n))


# -- Hadamard tests -----------------------------------------------------------


def hadamard_layout(n: int) -> dict[str, int]:
    return {"a0": 0, "a1": 1, **q_layout(n, offset=2)}


def _on_system(c: Circuit, n: int) -> Circuit:
    if c.num_qubits != n:
        raise ValueError(f"expected an {n}-qubit circuit, got {c.num_qubits}")
    return c.embed([p + 2 for p in range(n)], n + 2)


def _completion_on(t: TensorTerm, n: int) -> Circuit:
    if t.num_qubits != n:
        raise ValueError(f"term has {t.num_qubits} factors, register has {n} system qubits")
    return completion_circuit(t).embed([1] + [p + 2 for p in range(n)], n + 2)


def _check_part(part: str) -> str:
    if part not in ("real", "imag"):
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    return part


def _finish(body: list[Gate], n: int, part: str) -> Circuit:
    if _check_part(part) == "imag":
        body.append(Gate(GateKind.SDG, 0))
    body.append(Gate(GateKind.H, 0))
    return Circuit(n + 2, tuple(body), hadamard_layout(n))


def delta_circuit(
    ti: TensorTerm, tj: TensorTerm, v: Circuit, u: Circuit, k: int, part: str = "real"
) -> Circuit:
    """Hadamard test whose ``P01 - P11`` is Re/Im ``<psi| A_j^+ U Z_k U^+ A_i |psi>``.

    ``k`` counts system qubits from 1.
    """
    n = v.num_qubits
    if u.num_qubits != n:
        raise ValueError("state-preparation and ansatz widths differ")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    _check_part(part)
    body = [Gate(GateKind.H, 0)]
    body += _on_system(v, n).gates
    body += controlled(_completion_on(ti, n), 0, CLOSED).gates
    u_sys = _on_system(u, n)
    body += controlled(u_sys.inverse(), 0, CLOSED).gates
    body.append(Gate(GateKind.Z, k + 1, ((0, CLOSED), (1, CLOSED))))
    body += controlled(u_sys, 0, CLOSED).gates
    body += controlled(_completion_on(tj, n), 0, OPEN).gates
    return _finish(body, n, part)


def beta_circuit(ti: TensorTerm, tj: TensorTerm, v: Circuit, part: str = "real") -> Circuit:
    """Hadamard test whose ``P01 - P11`` is Re/Im ``<psi| A_j^+ A_i |psi>``."""
    n = v.num_qubits
    _check_part(part)
    body = [Gate(GateKind.H, 0)]
    body += _on_system(v, n).gates
    body += controlled(_completion_on(ti, n), 0, CLOSED).gates
    body += controlled(_completion_on(tj, n), 0, OPEN).gates
    return _finish(body, n, part)


def gamma_circuit(tl: TensorTerm, v: Circuit, u: Circuit, part: str = "real") -> Circuit:
    """Hadamard test whose ``P01 - P11`` is Re/Im ``<b| A_l |psi>`` with ``|b> = U|0>``."""
    n = v.num_qubits
    if u.num_qubits != n:
        raise ValueError("state-preparation and ansatz widths differ")
    _check_part(part)
    body = [Gate(GateKind.H, 0)]
    body += controlled(_on_system(u, n), 0, OPEN).gates
    body += controlled(_on_system(v, n), 0, CLOSED).gates
    body += controlled(_completion_on(tl, n), 0, CLOSED).gates
    body.append(Gate(GateKind.MCX, 1, ((0, OPEN),)))
    return _finish(body, n, part)
