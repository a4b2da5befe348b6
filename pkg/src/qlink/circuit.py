"""Circuit container, static validation and dense circuit matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from qlink.errors import ErrorCode, ValidationError
from qlink.gates import (
    CHANNEL_OPS,
    PAULI_AXES,
    Gate,
    Op,
    Param,
    base_matrix,
)

# Above this the dense 4^n matrices stop being a sensible oracle.
MATRIX_QUBIT_CAP = 12

UNITARITY_TOL = 1e-10
CPTP_TOL = 1e-10

# Largest probability accepted by each channel, keyed by (opcode, target count).
MAX_PROBABILITY = {
    (Op.Depol, 1): 3 / 4,
    (Op.Depol, 2): 15 / 16,
    (Op.Deph, 1): 1 / 2,
    (Op.Deph, 2): 3 / 4,
    (Op.Damp, 1): 1.0,
}


@dataclass(frozen=True)
class PauliString:
    """Tensor product of X/Y/Z factors on distinct qubits."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(a), int(q)) for a, q in self.factors)
        object.__setattr__(self, "factors", factors)
        if not factors:
            raise ValueError("a Pauli string needs at least one factor")
        for axis, q in factors:
            if axis not in PAULI_AXES:
                raise ValueError(f"unknown Pauli axis {axis!r}")
            if q < 0:
                raise ValueError("qubit indices must be non-negative")
        qubits = [q for _, q in factors]
        if len(set(qubits)) != len(qubits):
            raise ValueError("Pauli string repeats a qubit")

    @classmethod
    def parse(cls, text: str) -> PauliString:
        """Build from ``"X 0 Y 3"``-style text."""
        tokens = text.split()
        if len(tokens) % 2:
            raise ValueError(f"malformed Pauli string {text!r}")
        return cls(tuple((tokens[i], int(tokens[i + 1])) for i in range(0, len(tokens), 2)))

    @property
    def axes(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.factors)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for _, q in self.factors)

    def __str__(self):
        return " ".join(f"{a} {q}" for a, q in self.factors)


@dataclass
class Circuit:
    """An ordered list of gates.

    ``num_qubits`` is optional; when absent the circuit spans ``max index + 1``
    qubits. Circuits concatenate with ``+`` and slice like lists.
    """

    gates: list[Gate] = field(default_factory=list)
    num_qubits: int | None = None

    def __post_init__(self):
        self.gates = list(self.gates)

    def __len__(self):
        return len(self.gates)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Circuit(self.gates[item], self.num_qubits)
        return self.gates[item]

    def __add__(self, other):
        other_gates = other.gates if isinstance(other, Circuit) else list(other)
        n = None
        if isinstance(other, Circuit) and None not in (self.num_qubits, other.num_qubits):
            n = max(self.num_qubits, other.num_qubits)
        return Circuit(self.gates + other_gates, n)

    def __eq__(self, other):
        if isinstance(other, Circuit):
            return self.gates == other.gates
        if isinstance(other, list):
            return self.gates == other
        return NotImplemented

    def append(self, gate: Gate) -> None:
        self.gates.append(gate)

    def extend(self, gates: Iterable[Gate]) -> None:
        self.gates.extend(gates)

    @property
    def span(self) -> int:
        """Number of qubits the circuit touches, honouring ``num_qubits``."""
        used = max((max(g.qubits) for g in self.gates if g.qubits), default=-1) + 1
        if self.num_qubits is None:
            return used
        return max(self.num_qubits, used)

    @property
    def is_unitary(self) -> bool:
        return all(g.is_unitary for g in self.gates)

    @property
    def parameter_slots(self) -> set[int]:
        return {p.index for g in self.gates for p in g.params if isinstance(p, Param)}

    def __str__(self):
        from qlink.language import print_circuit

        return print_circuit(self)


# -- validation ---------------------------------------------------------------

_FIXED_TARGETS = {
    Op.X: 1,
    Op.Y: 1,
    Op.Z: 1,
    Op.H: 1,
    Op.S: 1,
    Op.T: 1,
    Op.SWAP: 2,
    Op.Rx: 1,
    Op.Ry: 1,
    Op.Rz: 1,
    Op.Ph: 1,
    Op.M: 1,
    Op.Damp: 1,
}
_PARAM_COUNT = {op: 0 for op in Op}
_PARAM_COUNT.update({Op.Rx: 1, Op.Ry: 1, Op.Rz: 1, Op.R: 1, Op.Ph: 1, Op.Depol: 1, Op.Deph: 1, Op.Damp: 1})


def _fail(code: ErrorCode, message: str) -> ValidationError:
    return ValidationError(code, message)


def check_gate(gate: Gate, num_qubits: int, density: bool | None = None) -> None:
    """Raise :class:`ValidationError` if ``gate`` cannot act on ``num_qubits`` qubits.

    ``density`` selects the register kind; ``None`` skips the kind-dependent
    rule that channels need a density matrix.
    """
    op = gate.op
    ts, cs = gate.targets, gate.controls

    # arity
    if not ts:
        raise _fail(ErrorCode.INVALID_ARITY, f"{op.name} needs at least one target")
    if op in _FIXED_TARGETS and len(ts) != _FIXED_TARGETS[op]:
        raise _fail(
            ErrorCode.INVALID_ARITY,
            f"{op.name} takes {_FIXED_TARGETS[op]} target(s), got {len(ts)}",
        )
    if op in (Op.Depol, Op.Deph) and len(ts) not in (1, 2):
        raise _fail(ErrorCode.INVALID_ARITY, f"{op.name} takes 1 or 2 targets, got {len(ts)}")
    if len(gate.params) != _PARAM_COUNT[op]:
        raise _fail(
            ErrorCode.INVALID_ARITY,
            f"{op.name} takes {_PARAM_COUNT[op]} parameter(s), got {len(gate.params)}",
        )
    if op is Op.R:
        if len(gate.paulis) != len(ts):
            raise _fail(ErrorCode.INVALID_ARITY, "R needs one Pauli axis per target")
        if any(a not in PAULI_AXES for a in gate.paulis):
            raise _fail(ErrorCode.INVALID_ARITY, "R axes must be X, Y or Z")
    elif gate.paulis:
        raise _fail(ErrorCode.INVALID_ARITY, f"{op.name} takes no Pauli axes")
    if (op is Op.M or op in CHANNEL_OPS) and cs:
        raise _fail(ErrorCode.INVALID_ARITY, f"{op.name} cannot be controlled")
    if op is Op.U and gate.matrix is None:
        raise _fail(ErrorCode.INVALID_ARITY, "U needs a matrix")
    if op is not Op.U and gate.matrix is not None:
        raise _fail(ErrorCode.INVALID_ARITY, f"{op.name} takes no matrix")
    if op is Op.Kraus and not gate.kraus:
        raise _fail(ErrorCode.INVALID_ARITY, "Kraus needs at least one operator")
    if op is not Op.Kraus and gate.kraus is not None:
        raise _fail(ErrorCode.INVALID_ARITY, f"{op.name} takes no Kraus operators")

    # indices
    for q in cs + ts:
        if not 0 <= q < num_qubits:
            raise _fail(
                ErrorCode.INVALID_QUBIT_INDEX,
                f"qubit {q} out of range for a {num_qubits}-qubit register",
            )
    if len(set(ts)) != len(ts):
        raise _fail(ErrorCode.DUPLICATE_QUBIT, "target qubits must be unique")
    if len(set(cs)) != len(cs):
        raise _fail(ErrorCode.DUPLICATE_QUBIT, "control qubits must be unique")
    if set(cs) & set(ts):
        raise _fail(ErrorCode.DUPLICATE_QUBIT, "control and target qubits must differ")

    # parameters
    for p in gate.params:
        if isinstance(p, Param):
            raise _fail(ErrorCode.UNBOUND_PARAMETER, f"parameter {p} is unbound")
        if not math.isfinite(p):
            raise _fail(ErrorCode.INVALID_PARAMETER, f"non-finite parameter {p}")

    dim = 2 ** len(ts)
    if op is Op.U:
        m = gate.matrix
        if m.shape != (dim, dim):
            raise _fail(
                ErrorCode.DIMENSION_MISMATCH,
                f"U on {len(ts)} target(s) needs a {dim}x{dim} matrix, got {m.shape}",
            )
        if not np.all(np.isfinite(m)):
            raise _fail(ErrorCode.INVALID_PARAMETER, "U matrix has non-finite entries")
        if np.max(np.abs(m.conj().T @ m - np.eye(dim))) > UNITARITY_TOL:
            raise _fail(ErrorCode.NON_UNITARY_MATRIX, "U matrix is not unitary")
    if op is Op.Kraus:
        total = np.zeros((dim, dim), dtype=complex)
        for k in gate.kraus:
            if k.shape != (dim, dim):
                raise _fail(
                    ErrorCode.DIMENSION_MISMATCH,
                    f"Kraus operators on {len(ts)} target(s) must be {dim}x{dim}, got {k.shape}",
                )
            if not np.all(np.isfinite(k)):
                raise _fail(ErrorCode.INVALID_PARAMETER, "Kraus operator has non-finite entries")
            total += k.conj().T @ k
        if np.max(np.abs(total - np.eye(dim))) > CPTP_TOL:
            raise _fail(ErrorCode.NON_CPTP_KRAUS, "Kraus map is not trace preserving")
    if (op, len(ts)) in MAX_PROBABILITY:
        p = gate.params[0]
        hi = MAX_PROBABILITY[(op, len(ts))]
        if not 0.0 <= p <= hi:
            raise _fail(
                ErrorCode.PROBABILITY_OUT_OF_RANGE,
                f"{op.name} probability {p} outside [0, {hi:g}]",
            )

    if density is False and op in CHANNEL_OPS:
        raise _fail(
            ErrorCode.DENSITY_ONLY_CHANNEL,
            f"{op.name} requires a density-matrix register",
        )


def validate_circuit(
    circuit: Circuit | Sequence[Gate], num_qubits: int | None = None, density: bool | None = None
) -> list[ValidationError]:
    """Statically check every gate; return the errors found, tagged with gate indices.

    An empty list means the circuit can be applied to a register of
    ``num_qubits`` qubits (of the given kind, when ``density`` is not None).
    """
    gates = list(circuit)
    if num_qubits is None:
        num_qubits = Circuit(gates, getattr(circuit, "num_qubits", None)).span
    errors = []
    for i, gate in enumerate(gates):
        try:
            check_gate(gate, num_qubits, density)
        except ValidationError as err:
            errors.append(err.at_gate(i))
    return errors


# -- dense matrices -----------------------------------------------------------


def embed_matrix(
    matrix: np.ndarray, targets: Sequence[int], controls: Sequence[int], num_qubits: int
) -> np.ndarray:
    """Full ``2^n x 2^n`` operator of ``matrix`` on ``targets`` conditioned on ``controls``.

    Built by explicit basis-index bookkeeping, independently of the
    simulator's kernels.
    """
    dim = 2**num_qubits
    k = len(targets)
    cols = np.arange(dim)
    ctrl_mask = sum(1 << c for c in controls)
    active = (cols & ctrl_mask) == ctrl_mask
    # sub-index of each column on the target qubits
    sub = np.zeros(dim, dtype=np.int64)
    for j, t in enumerate(targets):
        sub |= ((cols >> t) & 1) << j
    cleared = cols.copy()
    for t in targets:
        cleared &= ~(1 << t)

    full = np.zeros((dim, dim), dtype=complex)
    idle = cols[~active]
    full[idle, idle] = 1.0
    act_cols = cols[active]
    for out in range(2**k):
        rows = cleared[active].copy()
        for j, t in enumerate(targets):
            rows |= ((out >> j) & 1) << t
        full[rows, act_cols] = matrix[out, sub[active]]
    return full


def gate_matrix(gate: Gate, num_qubits: int) -> np.ndarray:
    """Dense operator of one unitary gate on ``num_qubits`` qubits."""
    return embed_matrix(base_matrix(gate), gate.targets, gate.controls, num_qubits)


def circuit_matrix(circuit: Circuit | Sequence[Gate], num_qubits: int) -> np.ndarray:
    """Dense unitary of a unitary-only circuit; the last gate is the leftmost factor."""
    if num_qubits > MATRIX_QUBIT_CAP:
        raise ValidationError(
            ErrorCode.TOO_MANY_QUBITS,
            f"dense matrices are capped at {MATRIX_QUBIT_CAP} qubits",
        )
    out = np.eye(2**num_qubits, dtype=complex)
    for i, gate in enumerate(circuit):
        if not gate.is_unitary:
            raise ValidationError(
                ErrorCode.UNSUPPORTED_OPERATION,
                f"{gate.op.name} has no unitary matrix",
                i,
            )
        try:
            check_gate(gate, num_qubits)
        except ValidationError as err:
            raise err.at_gate(i) from None
        out = gate_matrix(gate, num_qubits) @ out
    return out
