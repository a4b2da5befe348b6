"""Gate data model and the base matrices of every unitary opcode.

Qubit ordering: qubit 0 is the least significant bit of a basis index, so
basis state ``b`` has qubit ``q`` equal to ``(b >> q) & 1``. For gates acting on
several targets, bit ``j`` of the gate matrix index refers to ``targets[j]``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache, reduce
from typing import Sequence, Union

import numpy as np


class Op(IntEnum):
    """Gate opcodes. Values double as wire opcodes and must stay stable."""

    X = 1
    Y = 2
    Z = 3
    H = 4
    S = 5
    T = 6
    SWAP = 7
    Rx = 8
    Ry = 9
    Rz = 10
    R = 11
    Ph = 12
    U = 13
    M = 14
    Depol = 15
    Deph = 16
    Damp = 17
    Kraus = 18


UNITARY_OPS = frozenset(
    {Op.X, Op.Y, Op.Z, Op.H, Op.S, Op.T, Op.SWAP, Op.Rx, Op.Ry, Op.Rz, Op.R, Op.Ph, Op.U}
)
CHANNEL_OPS = frozenset({Op.Depol, Op.Deph, Op.Damp, Op.Kraus})
ROTATION_OPS = frozenset({Op.Rx, Op.Ry, Op.Rz, Op.R, Op.Ph})

PAULI_AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class Param:
    """A symbolic parameter slot, numbered from 1, awaiting a bound value."""

    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("parameter slots are numbered from 1")

    def __str__(self):
        return f"θ{self.index}"


Number = Union[float, Param]


def _as_tuple(values) -> tuple:
    if values is None:
        return ()
    if isinstance(values, (int, np.integer)):
        return (int(values),)
    return tuple(values)


@dataclass(eq=False)
class Gate:
    """One circuit operation.

    ``paulis`` is only used by ``R`` and names the Pauli axis acting on each
    target. ``matrix`` holds the ``U`` matrix and ``kraus`` the operators of a
    ``Kraus`` map. Equality is structural and bit-exact.
    """

    op: Op
    targets: tuple[int, ...] = ()
    controls: tuple[int, ...] = ()
    params: tuple[Number, ...] = ()
    paulis: tuple[str, ...] = ()
    matrix: np.ndarray | None = None
    kraus: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        self.op = Op(self.op)
        self.targets = tuple(int(q) for q in _as_tuple(self.targets))
        self.controls = tuple(int(q) for q in _as_tuple(self.controls))
        self.params = tuple(
            p if isinstance(p, Param) else float(p) for p in _as_tuple(self.params)
        )
        self.paulis = tuple(str(p) for p in self.paulis)
        if self.matrix is not None:
            self.matrix = np.array(self.matrix, dtype=complex)
        if self.kraus is not None:
            self.kraus = tuple(np.array(k, dtype=complex) for k in self.kraus)

    def __eq__(self, other):
        if not isinstance(other, Gate):
            return NotImplemented
        if (self.op, self.targets, self.controls, self.paulis) != (
            other.op,
            other.targets,
            other.controls,
            other.paulis,
        ):
            return False
        if len(self.params) != len(other.params):
            return False
        for a, b in zip(self.params, other.params):
            if isinstance(a, Param) or isinstance(b, Param):
                if a != b:
                    return False
            elif not _same_float(a, b):
                return False
        if not _same_array(self.matrix, other.matrix):
            return False
        if (self.kraus is None) != (other.kraus is None):
            return False
        if self.kraus is not None:
            if len(self.kraus) != len(other.kraus):
                return False
            return all(_same_array(a, b) for a, b in zip(self.kraus, other.kraus))
        return True

    __hash__ = None

    def __repr__(self):
        from qlink.language import format_gate

        return f"Gate({format_gate(self)!r})"

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    @property
    def is_unitary(self) -> bool:
        return self.op in UNITARY_OPS

    @property
    def is_channel(self) -> bool:
        return self.op in CHANNEL_OPS

    @property
    def is_symbolic(self) -> bool:
        return any(isinstance(p, Param) for p in self.params)

    def controlled(self, *controls: int) -> Gate:
        """Return a copy with extra control qubits prepended."""
        return Gate(
            self.op,
            self.targets,
            tuple(controls) + self.controls,
            self.params,
            self.paulis,
            self.matrix,
            self.kraus,
        )


def _same_float(a: float, b: float) -> bool:
    return a == b and math.copysign(1.0, a) == math.copysign(1.0, b) or (a != a and b != b)


def _same_array(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    if a.shape != b.shape:
        return False
    return a.tobytes() == b.tobytes()


# -- convenience constructors -------------------------------------------------


def X(q: int) -> Gate:
    return Gate(Op.X, (q,))


def Y(q: int) -> Gate:
    return Gate(Op.Y, (q,))


def Z(q: int) -> Gate:
    return Gate(Op.Z, (q,))


def H(q: int) -> Gate:
    return Gate(Op.H, (q,))


def S(q: int) -> Gate:
    return Gate(Op.S, (q,))


def T(q: int) -> Gate:
    return Gate(Op.T, (q,))


def SWAP(q1: int, q2: int) -> Gate:
    return Gate(Op.SWAP, (q1, q2))


def Rx(theta: Number, q: int) -> Gate:
    return Gate(Op.Rx, (q,), params=(theta,))


def Ry(theta: Number, q: int) -> Gate:
    return Gate(Op.Ry, (q,), params=(theta,))


def Rz(theta: Number, q: int) -> Gate:
    return Gate(Op.Rz, (q,), params=(theta,))


def Ph(theta: Number, q: int) -> Gate:
    return Gate(Op.Ph, (q,), params=(theta,))


def R(theta: Number, pauli_string) -> Gate:
    """Rotation ``exp(-i theta P / 2)`` about a Pauli string.

    ``pauli_string`` is a :class:`~qlink.circuit.PauliString` or a sequence of
    ``(axis, qubit)`` pairs.
    """
    factors = getattr(pauli_string, "factors", pauli_string)
    axes = tuple(a for a, _ in factors)
    qubits = tuple(q for _, q in factors)
    return Gate(Op.R, qubits, params=(theta,), paulis=axes)


def U(matrix, *targets: int) -> Gate:
    return Gate(Op.U, targets, matrix=matrix)


def M(q: int) -> Gate:
    return Gate(Op.M, (q,))


def Depol(p: float, *targets: int) -> Gate:
    return Gate(Op.Depol, targets, params=(p,))


def Deph(p: float, *targets: int) -> Gate:
    return Gate(Op.Deph, targets, params=(p,))


def Damp(p: float, q: int) -> Gate:
    return Gate(Op.Damp, (q,), params=(p,))


def Kraus(ops: Sequence, *targets: int) -> Gate:
    return Gate(Op.Kraus, targets, kraus=tuple(ops))


def C(controls, gate: Gate) -> Gate:
    """Wrap ``gate`` with one or more control qubits."""
    return gate.controlled(*_as_tuple(controls))


# -- matrices -----------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@lru_cache(maxsize=256)
def _pauli_product(axes: tuple[str, ...]) -> np.ndarray:
    # kron puts its first argument on the most significant bits
    out = reduce(np.kron, [PAULI[a] for a in reversed(axes)], np.eye(1, dtype=complex))
    out.flags.writeable = False
    return out


def pauli_product_matrix(axes: Sequence[str]) -> np.ndarray:
    """Dense matrix of ``axes[0]`` on bit 0, ``axes[1]`` on bit 1, and so on."""
    return _pauli_product(tuple(axes)).copy()


def rotation_matrix(theta: float, axes: Sequence[str]) -> np.ndarray:
    """``exp(-i theta P / 2)`` for the Pauli product ``P`` over ``axes``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if len(axes) == 1:
        a = axes[0]
        if a == "X":
            return np.array([[c, -1j * s], [-1j * s, c]])
        if a == "Y":
            return np.array([[c, -s], [s, c]], dtype=complex)
        if a == "Z":
            return np.array([[complex(c, -s), 0], [0, complex(c, s)]])
    p = _pauli_product(tuple(axes))
    return c * np.eye(len(p)) - 1j * s * p


def base_matrix(gate: Gate) -> np.ndarray:
    """The uncontrolled matrix of a unitary gate on its targets."""
    op = gate.op
    if gate.is_symbolic:
        raise ValueError("cannot build the matrix of a gate with unbound parameters")
    if op in (Op.X, Op.Y, Op.Z):
        return PAULI[op.name].copy()
    if op is Op.H:
        return _H.copy()
    if op is Op.S:
        return np.diag([1, 1j]).astype(complex)
    if op is Op.T:
        return np.diag([1, cmath.exp(1j * math.pi / 4)])
    if op is Op.SWAP:
        return _SWAP.copy()
    if op in (Op.Rx, Op.Ry, Op.Rz):
        return rotation_matrix(gate.params[0], op.name[1].upper())
    if op is Op.R:
        return rotation_matrix(gate.params[0], gate.paulis)
    if op is Op.Ph:
        return np.diag([1, cmath.exp(1j * gate.params[0])])
    if op is Op.U:
        return gate.matrix.copy()
    raise ValueError(f"{op.name} is not a unitary gate")


def kraus_operators(gate: Gate) -> list[np.ndarray]:
    """Kraus operators of a decoherence channel on its targets."""
    op = gate.op
    if op is Op.Kraus:
        return [k.copy() for k in gate.kraus]
    p = gate.params[0]
    k = len(gate.targets)
    if op is Op.Depol:
        # (1-p) rho + p/(4^k - 1) sum over non-identity Pauli strings
        strings = _pauli_strings(k)
        weight = p / (len(strings) - 1)
        ops = [math.sqrt(1 - p) * strings[0]]
        ops += [math.sqrt(weight) * s for s in strings[1:]]
        return ops
    if op is Op.Deph:
        if k == 1:
            return [math.sqrt(1 - p) * I2, math.sqrt(p) * PAULI["Z"]]
        zi = pauli_product_matrix("ZI")
        iz = pauli_product_matrix("IZ")
        zz = pauli_product_matrix("ZZ")
        w = math.sqrt(p / 3)
        return [math.sqrt(1 - p) * np.eye(4, dtype=complex), w * zi, w * iz, w * zz]
    if op is Op.Damp:
        return [
            np.array([[1, 0], [0, math.sqrt(1 - p)]], dtype=complex),
            np.array([[0, math.sqrt(p)], [0, 0]], dtype=complex),
        ]
    raise ValueError(f"{op.name} is not a channel")


def _pauli_strings(k: int) -> list[np.ndarray]:
    """All 4^k Pauli strings on k qubits, identity first."""
    out = [np.eye(1, dtype=complex)]
    for _ in range(k):
        out = [np.kron(a, b) for a in (PAULI["I"], PAULI["X"], PAULI["Y"], PAULI["Z"]) for b in out]
    # identity is the first product in this enumeration
    return out


def generator_paulis(gate: Gate) -> list[tuple[complex, tuple[str, ...]]]:
    """Pauli decomposition of ``i * d/dtheta`` applied before the rotation.

    For a rotation ``G(theta)`` the derivative is ``G'(theta) = G(theta) * D``
    where ``D = sum_k c_k P_k`` is returned as ``[(c_k, axes_k), ...]``;
    ``axes_k`` spans the gate's targets (``"I"`` allowed).
    """
    op = gate.op
    if op in (Op.Rx, Op.Ry, Op.Rz):
        return [(-0.5j, (op.name[1].upper(),))]
    if op is Op.R:
        return [(-0.5j, gate.paulis)]
    if op is Op.Ph:
        # d/dθ diag(1, e^{iθ}) = Ph(θ) · i|1><1|, and |1><1| = (I - Z)/2
        return [(0.5j, ("I",)), (-0.5j, ("Z",))]
    raise ValueError(f"{op.name} has no rotation parameter")
