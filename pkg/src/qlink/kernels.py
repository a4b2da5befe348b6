"""In-place amplitude kernels.

A register's amplitudes live in a flat complex array. Viewing it as a tensor
of ``m`` binary axes (``m = n`` for a state vector, ``2n`` for a row-major
density matrix) puts qubit ``q`` on axis ``m - 1 - q``; for a density matrix
the column index occupies qubits ``0..n-1`` and the row index ``n..2n-1``.
Fixing control axes to 1 by basic indexing yields a writable view, so every
kernel below handles controls for free.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def _subview(amps: np.ndarray, m: int, targets: Sequence[int], controls: Sequence[int]):
    # merge runs of untouched axes so numpy iterates over few, long dimensions
    special = {m - 1 - q for q in (*targets, *controls)}
    shape, position, run = [], {}, 0
    for a in range(m):
        if a in special:
            if run:
                shape.append(1 << run)
                run = 0
            position[a] = len(shape)
            shape.append(2)
        else:
            run += 1
    if run:
        shape.append(1 << run)
    tensor = amps.reshape(shape)
    index = [slice(None)] * len(shape)
    for c in controls:
        index[position[m - 1 - c]] = 1
    sub = tensor[tuple(index)]
    fixed = sorted(position[m - 1 - c] for c in controls)
    axes = []
    for t in targets:
        p = position[m - 1 - t]
        axes.append(p - sum(1 for f in fixed if f < p))
    return sub, axes


def _at(axis: int, value: int) -> tuple:
    return (slice(None),) * axis + (value,)


def _apply_1q(sub: np.ndarray, axis: int, mat: np.ndarray) -> None:
    i0, i1 = _at(axis, 0), _at(axis, 1)
    m00, m01, m10, m11 = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    if m01 == 0 and m10 == 0:
        if m00 != 1:
            sub[i0] *= m00
        if m11 != 1:
            sub[i1] *= m11
        return
    a0 = sub[i0].copy()
    a1 = sub[i1]
    if m00 == 0 and m11 == 0:
        sub[i0] = m01 * a1
        sub[i1] = m10 * a0
        return
    new0 = m00 * a0 + m01 * a1
    sub[i1] = m10 * a0 + m11 * a1
    sub[i0] = new0


def _apply_2q(sub: np.ndarray, axes: Sequence[int], mat: np.ndarray) -> None:
    # matrix bit 0 <-> axes[0], bit 1 <-> axes[1]
    a0, a1 = axes
    index = []
    for b in range(4):
        idx = [slice(None)] * sub.ndim
        idx[a0] = b & 1
        idx[a1] = b >> 1
        index.append(tuple(idx))
    blocks = [sub[idx].copy() for idx in index]
    for r in range(4):
        acc = None
        for c in range(4):
            coef = mat[r, c]
            if coef == 0:
                continue
            term = blocks[c] if coef == 1 else coef * blocks[c]
            acc = term.copy() if acc is None else acc + term
        sub[index[r]] = 0 if acc is None else acc


def _apply_generic(sub: np.ndarray, axes: Sequence[int], mat: np.ndarray) -> None:
    k = len(axes)
    tensor = mat.reshape((2,) * (2 * k))
    # tensor axis 0 is the most significant matrix bit, i.e. targets[k-1]
    in_axes = list(reversed(axes))
    out = np.tensordot(tensor, sub, axes=(list(range(k, 2 * k)), in_axes))
    sub[...] = np.moveaxis(out, list(range(k)), in_axes)


def apply_matrix(
    amps: np.ndarray,
    m: int,
    mat: np.ndarray,
    targets: Sequence[int],
    controls: Sequence[int] = (),
) -> None:
    """Left-multiply by ``mat`` on ``targets``, conditioned on ``controls`` being 1."""
    sub, axes = _subview(amps, m, targets, controls)
    if len(axes) == 1:
        _apply_1q(sub, axes[0], mat)
    elif len(axes) == 2:
        _apply_2q(sub, axes, mat)
    else:
        _apply_generic(sub, axes, mat)


def apply_unitary(
    amps: np.ndarray,
    num_qubits: int,
    density: bool,
    mat: np.ndarray,
    targets: Sequence[int],
    controls: Sequence[int] = (),
) -> None:
    """``psi <- U psi`` or ``rho <- U rho U^dagger``."""
    if not density:
        apply_matrix(amps, num_qubits, mat, targets, controls)
        return
    n = num_qubits
    apply_matrix(amps, 2 * n, mat, [t + n for t in targets], [c + n for c in controls])
    apply_matrix(amps, 2 * n, mat.conj(), targets, controls)


def superoperator(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Matrix of ``rho -> sum K rho K^dagger`` on (column bits, row bits)."""
    return sum(np.kron(k, k.conj()) for k in kraus)


def apply_channel(
    amps: np.ndarray, num_qubits: int, kraus: Sequence[np.ndarray], targets: Sequence[int]
) -> None:
    """Apply a Kraus map to a density matrix in place."""
    n = num_qubits
    wires = list(targets) + [t + n for t in targets]
    apply_matrix(amps, 2 * n, superoperator(kraus), wires)


def probability_of_one(amps: np.ndarray, num_qubits: int, density: bool, qubit: int) -> float:
    n = num_qubits
    if not density:
        sub = amps.reshape((2,) * n)[_at(n - 1 - qubit, 1)]
        return float(np.vdot(sub, sub).real)
    dim = 2**n
    diag = amps.reshape(dim, dim).diagonal().real
    mask = ((np.arange(dim) >> qubit) & 1).astype(bool)
    return float(diag[mask].sum())


def collapse(
    amps: np.ndarray, num_qubits: int, density: bool, qubit: int, outcome: int, prob: float
) -> None:
    """Project ``qubit`` onto ``outcome`` and renormalise by its probability."""
    n = num_qubits
    other = 1 - outcome
    if not density:
        amps.reshape((2,) * n)[_at(n - 1 - qubit, other)] = 0
        amps /= np.sqrt(prob)
        return
    tensor = amps.reshape((2,) * (2 * n))
    tensor[_at(n - 1 - qubit, other)] = 0
    tensor[_at(2 * n - 1 - qubit, other)] = 0
    amps /= prob


def apply_pauli_string(
    amps: np.ndarray, m: int, axes: Sequence[str], qubits: Sequence[int]
) -> None:
    """Left-multiply by a Pauli product (no conjugation, also for density rows)."""
    from qlink.gates import PAULI

    for a, q in zip(axes, qubits):
        apply_matrix(amps, m, PAULI[a], (q,))
