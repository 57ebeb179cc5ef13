"""In-place gate application on a ``(2,)*n + batch`` amplitude tensor.

Qubit 0 is the leading (most significant) axis.  Controls are realized by
integer indexing of the control axes, so multi-controlled gates never build a
matrix.
"""

from __future__ import annotations

import numpy as np


def apply_gate(psi: np.ndarray, gate, num_qubits: int) -> None:
    idx: list = [slice(None)] * num_qubits
    for q, closed in gate.controls:
        idx[q] = 1 if closed else 0
    i0 = list(idx)
    i1 = list(idx)
    i0[gate.target] = 0
    i1[gate.target] = 1
    i0, i1 = tuple(i0), tuple(i1)

    if gate.is_x_type:
        tmp = psi[i0].copy()
        psi[i0] = psi[i1]
        psi[i1] = tmp
        return
    m = gate.matrix()
    if m[0, 1] == 0 and m[1, 0] == 0:
        if m[0, 0] != 1:
            psi[i0] *= m[0, 0]
        if m[1, 1] != 1:
            psi[i1] *= m[1, 1]
        return
    a = psi[i0].copy()
    b = psi[i1].copy()
    psi[i0] = m[0, 0] * a + m[0, 1] * b
    psi[i1] = m[1, 0] * a + m[1, 1] * b
