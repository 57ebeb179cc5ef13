"""1-D heat equation discretized into a single space-time linear system ``A u = b``.

Backward Euler in time, second-order central differences in space and a
first-order one-sided stencil at the flux boundaries.  The unknown vector is
time-major: ``u = [u_1, u_2, ..., u_{n_t}]`` with ``u_1 = u_0`` (the first block
row of ``A`` is the identity).
"""

from __future__ import annotations

import csv
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .decomposer import BoundarySpec, decompose_heat, diffusion_number
from .sigma_core import Decomposition, decomposition_matrix


@dataclass(frozen=True)
class HeatParams:
    n_x: int = 4
    n_t: int = 4
    dx: float = 0.25
    dt: float = 0.01
    diffusivity: float = 1.0
    conductivity: float = 1.0
    flux: float = 2.5
    u0: tuple[float, ...] | None = None
    bc: BoundarySpec = field(default_factory=BoundarySpec.neumann)

    def __post_init__(self) -> None:
        for name in ("n_x", "n_t"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 2 or v & (v - 1):
                raise ValueError(f"{name} must be a power of two >= 2, got {v!r}")
        for name in ("dx", "dt", "conductivity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.u0 is None:
            object.__setattr__(self, "u0", (1.0,) * self.n_x)
        else:
            object.__setattr__(self, "u0", tuple(float(v) for v in self.u0))
        if len(self.u0) != self.n_x:
            raise ValueError(f"u0 has length {len(self.u0)}, expected n_x={self.n_x}")
        self.bc.corner_value(self.dx)  # validates Robin weights

    @property
    def num_qubits(self) -> int:
        return (self.n_x * self.n_t).bit_length() - 1

    @property
    def source(self) -> float:
        """Per-step boundary source ``q dt / (k dx)``."""
        return self.flux * self.dt / (self.conductivity * self.dx)


@dataclass(frozen=True)
class LinearSystem:
    params: HeatParams
    decomposition: Decomposition
    dense_a: np.ndarray
    b: np.ndarray


def spatial_operator(params: HeatParams) -> np.ndarray:
    """Dense ``n_x x n_x`` operator with ``-2 + w`` in the two corners."""
    n = params.n_x
    a = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    w = params.bc.corner_value(params.dx)
    a[0, 0] += w
    a[-1, -1] += w
    return a


def assemble_dense(params: HeatParams) -> np.ndarray:
    """Directly assembled system matrix, independent of any decomposition."""
    n_x, n_t = params.n_x, params.n_t
    a1 = np.eye(n_x * n_t) - np.kron(np.eye(n_t, k=-1), np.eye(n_x))
    mask = np.eye(n_t)
    mask[0, 0] = 0.0
    a2 = np.kron(mask, spatial_operator(params))
    return a1 - diffusion_number(params) * a2


def assemble_rhs(params: HeatParams) -> np.ndarray:
    blocks = [np.asarray(params.u0, dtype=float)]
    e1 = np.zeros(params.n_x)
    e1[0] = params.source
    blocks += [e1] * (params.n_t - 1)
    return np.concatenate(blocks)


def build_system(params: HeatParams) -> LinearSystem:
    decomposition = decompose_heat(params)
    dense = assemble_dense(params)
    return LinearSystem(params, decomposition, dense, assemble_rhs(params))


def reconstruction_error(system: LinearSystem) -> float:
    """Max entrywise gap between the decomposition and the dense matrix."""
    return float(np.max(np.abs(decomposition_matrix(system.decomposition) - system.dense_a)))


class SingularSystemError(np.linalg.LinAlgError):
    pass


def classical_solve(system: LinearSystem | tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """LU (partial pivoting) solve of the dense system."""
    if isinstance(system, LinearSystem):
        a, b = system.dense_a, system.b
    else:
        a, b = system
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    if np.any(np.abs(np.diag(lu)) < 1e-14 * max(1.0, np.abs(a).max())):
        raise SingularSystemError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), b)


def fidelity(x: Sequence[complex] | np.ndarray, psi) -> float:
    """``|<x/|x|, psi>|**2`` for a vector ``x`` and a state (array or StateVector)."""
    x = np.asarray(x, dtype=complex)
    amps = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex)
    if x.shape != amps.shape:
        raise ValueError(f"dimension mismatch {x.shape} vs {amps.shape}")
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("zero vector has no direction")
    npsi = np.linalg.norm(amps)
    return float(abs(np.vdot(x / nx, amps / npsi)) ** 2)


def time_blocks(params: HeatParams, u: np.ndarray) -> np.ndarray:
    """Reshape a time-major solution to ``(n_t, n_x)``."""
    return np.asarray(u).reshape(params.n_t, params.n_x)


def write_solution_csv(path: str | Path, params: HeatParams, u: np.ndarray) -> None:
    blocks = time_blocks(params, np.real_if_close(u))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_index", "x_index", "u"])
        for ti, row in enumerate(blocks, start=1):
            for xi, val in enumerate(row, start=1):
                w.writerow([ti, xi, repr(float(np.real(val)))])
