"""Local simulation environment: a registry of registers addressed by integer ID."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qlink import kernels
from qlink.circuit import Circuit, check_gate
from qlink.errors import ErrorCode, ResourceError, ValidationError
from qlink.gates import Damp, Deph, Depol, Gate, Kraus, Op, base_matrix, kraus_operators
from qlink.observables import PauliSum, apply_sum, expectation

log = logging.getLogger(__name__)

NORM_TOL = 1e-8
DENSITY_TOL = 1e-8


@dataclass(eq=False)
class Qureg:
    """A state vector (``2^n`` amplitudes) or row-major density matrix (``4^n``)."""

    id: int
    num_qubits: int
    is_density: bool
    amps: np.ndarray

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    @property
    def axes(self) -> int:
        return 2 * self.num_qubits if self.is_density else self.num_qubits

    def matrix(self) -> np.ndarray:
        return self.amps.reshape(self.dim, self.dim) if self.is_density else self.amps


def _physical_memory() -> int:
    try:
        return os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):
        return 1 << 40


def make_rng(seed) -> np.random.Generator:
    """Counter-based 64-bit generator used for every seeded draw."""
    return np.random.Generator(np.random.Philox(seed))


class Environment:
    """Owns quantum registers and applies circuits to them.

    All operations address registers by the integer ID returned from
    :meth:`create_qureg`; IDs are never reused. Measurement outcomes are drawn
    from the environment's generator, which :meth:`seed` resets.

    Not safe for concurrent mutation of the same register.
    """

    def __init__(self, seed: int | None = None):
        self._quregs: dict[int, Qureg] = {}
        self._next_id = 0
        self._rng = make_rng(seed)

    def seed(self, seed: int) -> None:
        self._rng = make_rng(seed)

    # -- lifecycle ------------------------------------------------------------

    def create_qureg(self, num_qubits: int, density: bool = False) -> int:
        num_qubits = int(num_qubits)
        if num_qubits < 1:
            raise ValidationError(ErrorCode.INVALID_NUM_QUBITS, "a register needs at least one qubit")
        entries = 4**num_qubits if density else 2**num_qubits
        if num_qubits > 62 or 16 * entries > _physical_memory():
            raise ResourceError(f"{entries} amplitudes exceed the available memory")
        try:
            amps = np.zeros(entries, dtype=complex)
        except MemoryError:
            raise ResourceError(f"could not allocate {entries} amplitudes") from None
        amps[0] = 1.0
        qid = self._next_id
        self._next_id += 1
        self._quregs[qid] = Qureg(qid, num_qubits, bool(density), amps)
        log.debug("created qureg %d (%d qubits, density=%s)", qid, num_qubits, density)
        return qid

    def create_density_qureg(self, num_qubits: int) -> int:
        return self.create_qureg(num_qubits, density=True)

    def destroy_qureg(self, qureg: int) -> None:
        self._get(qureg)
        del self._quregs[qureg]

    def destroy_all_quregs(self) -> None:
        self._quregs.clear()

    def list_quregs(self) -> list[int]:
        return sorted(self._quregs)

    def get_num_qubits(self, qureg: int) -> int:
        return self._get(qureg).num_qubits

    def is_density_matrix(self, qureg: int) -> bool:
        return self._get(qureg).is_density

    def _get(self, qureg) -> Qureg:
        try:
            return self._quregs[int(qureg)]
        except (KeyError, TypeError, ValueError):
            raise ValidationError(ErrorCode.UNKNOWN_QUREG, f"unknown qureg {qureg}") from None

    # -- initialisation ---------------------------------------------------------

    def init_zero(self, qureg: int) -> None:
        self.init_classical(qureg, 0)

    def init_plus(self, qureg: int) -> None:
        q = self._get(qureg)
        q.amps[:] = 1.0 / (q.dim if q.is_density else np.sqrt(q.dim))

    def init_classical(self, qureg: int, index: int) -> None:
        q = self._get(qureg)
        if not 0 <= int(index) < q.dim:
            raise ValidationError(
                ErrorCode.INDEX_OUT_OF_RANGE,
                f"basis index {index} out of range for {q.num_qubits} qubits",
            )
        q.amps[:] = 0
        index = int(index)
        q.amps[index * q.dim + index if q.is_density else index] = 1.0

    def init_pure_state(self, qureg: int, amps: Sequence[complex]) -> None:
        q = self._get(qureg)
        psi = np.asarray(amps, dtype=complex).reshape(-1)
        if psi.size != q.dim:
            raise ValidationError(
                ErrorCode.DIMENSION_MISMATCH,
                f"expected {q.dim} amplitudes, got {psi.size}",
            )
        if abs(np.vdot(psi, psi).real - 1) > NORM_TOL:
            raise ValidationError(ErrorCode.UNNORMALIZED_STATE, "state is not normalised")
        self._install_pure(q, psi)

    def init_random_pure(self, qureg: int, seed: int) -> None:
        """Haar-random pure state from independent complex Gaussian amplitudes."""
        q = self._get(qureg)
        rng = make_rng(seed)
        psi = rng.standard_normal(q.dim) + 1j * rng.standard_normal(q.dim)
        psi /= np.linalg.norm(psi)
        self._install_pure(q, psi)

    @staticmethod
    def _install_pure(q: Qureg, psi: np.ndarray) -> None:
        if q.is_density:
            q.amps[:] = np.outer(psi, psi.conj()).reshape(-1)
        else:
            q.amps[:] = psi

    def set_qureg_matrix(self, qureg: int, data) -> None:
        """Overwrite a register with a state vector or density matrix."""
        q = self._get(qureg)
        arr = np.array(data, dtype=complex)
        if not q.is_density:
            if arr.shape != (q.dim,):
                raise ValidationError(
                    ErrorCode.DIMENSION_MISMATCH,
                    f"expected a vector of {q.dim} amplitudes, got shape {arr.shape}",
                )
            q.amps[:] = arr
            return
        if arr.shape != (q.dim, q.dim):
            raise ValidationError(
                ErrorCode.DIMENSION_MISMATCH,
                f"expected a {q.dim}x{q.dim} matrix, got shape {arr.shape}",
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError(ErrorCode.UNPHYSICAL_DENSITY, "matrix has non-finite entries")
        if np.max(np.abs(arr - arr.conj().T)) > DENSITY_TOL:
            raise ValidationError(ErrorCode.UNPHYSICAL_DENSITY, "density matrix is not Hermitian")
        if abs(np.trace(arr) - 1) > DENSITY_TOL:
            raise ValidationError(ErrorCode.UNPHYSICAL_DENSITY, "density matrix trace is not 1")
        if np.linalg.eigvalsh((arr + arr.conj().T) / 2).min() < -DENSITY_TOL:
            raise ValidationError(ErrorCode.UNPHYSICAL_DENSITY, "density matrix is not positive")
        q.amps[:] = arr.reshape(-1)

    def get_qureg_matrix(self, qureg: int) -> np.ndarray:
        """Copy of the amplitudes: a vector, or a 2D matrix for density registers."""
        return self._get(qureg).matrix().copy()

    def clone_qureg(self, source: int) -> int:
        src = self._get(source)
        qid = self.create_qureg(src.num_qubits, src.is_density)
        self._quregs[qid].amps[:] = src.amps
        return qid

    def copy_qureg(self, dest: int, source: int) -> None:
        dst, src = self._get(dest), self._get(source)
        self._require_same_shape(dst, src)
        dst.amps[:] = src.amps

    def set_weighted_qureg(
        self, fac1: complex, qureg1: int, fac2: complex, qureg2: int, fac_out: complex, out: int
    ) -> None:
        """``out <- fac1 * qureg1 + fac2 * qureg2 + fac_out * out`` (unnormalised)."""
        a, b, o = self._get(qureg1), self._get(qureg2), self._get(out)
        self._require_same_shape(a, o)
        self._require_same_shape(b, o)
        o.amps[:] = complex(fac1) * a.amps + complex(fac2) * b.amps + complex(fac_out) * o.amps

    @staticmethod
    def _require_same_shape(a: Qureg, b: Qureg) -> None:
        if (a.num_qubits, a.is_density) != (b.num_qubits, b.is_density):
            raise ValidationError(
                ErrorCode.DIMENSION_MISMATCH,
                f"registers {a.id} and {b.id} differ in size or kind",
            )

    # -- gates and circuits ---------------------------------------------------------

    def apply_gate(self, qureg: int, gate: Gate) -> int | None:
        """Validate and apply one gate; returns the outcome of a measurement."""
        q = self._get(qureg)
        check_gate(gate, q.num_qubits, q.is_density)
        return self._apply(q, gate)

    def _apply(self, q: Qureg, gate: Gate) -> int | None:
        if gate.is_unitary:
            kernels.apply_unitary(
                q.amps, q.num_qubits, q.is_density, base_matrix(gate), gate.targets, gate.controls
            )
            return None
        if gate.op is Op.M:
            return self._measure(q, gate.targets[0])
        kernels.apply_channel(q.amps, q.num_qubits, kraus_operators(gate), gate.targets)
        return None

    def apply_circuit(self, qureg: int, circuit: Circuit | Sequence[Gate]) -> list[int]:
        """Apply gates in order and return measurement outcomes.

        Atomic: if any gate is rejected the register and the measurement
        generator are left exactly as they were before the call, and the error
        carries the failing gate's index.
        """
        q = self._get(qureg)
        gates = list(circuit)
        if all(g.is_unitary for g in gates):
            # unitary circuits are fully checkable before touching the register
            for i, g in enumerate(gates):
                try:
                    check_gate(g, q.num_qubits, q.is_density)
                except ValidationError as err:
                    raise err.at_gate(i) from None
            for g in gates:
                self._apply(q, g)
            return []
        snapshot = q.amps.copy()
        rng_state = self._rng.bit_generator.state
        outcomes = []
        for i, g in enumerate(gates):
            try:
                check_gate(g, q.num_qubits, q.is_density)
                outcome = self._apply(q, g)
            except ValidationError as err:
                q.amps[:] = snapshot
                self._rng.bit_generator.state = rng_state
                raise err.at_gate(i) from None
            except BaseException:
                q.amps[:] = snapshot
                self._rng.bit_generator.state = rng_state
                raise
            if outcome is not None:
                outcomes.append(outcome)
        return outcomes

    # -- decoherence ------------------------------------------------------------

    def mix_depolarising(self, qureg: int, qubit: int, prob: float) -> None:
        self.apply_gate(qureg, Depol(prob, qubit))

    def mix_two_qubit_depolarising(self, qureg: int, qubit1: int, qubit2: int, prob: float) -> None:
        self.apply_gate(qureg, Depol(prob, qubit1, qubit2))

    def mix_dephasing(self, qureg: int, qubit: int, prob: float) -> None:
        self.apply_gate(qureg, Deph(prob, qubit))

    def mix_two_qubit_dephasing(self, qureg: int, qubit1: int, qubit2: int, prob: float) -> None:
        self.apply_gate(qureg, Deph(prob, qubit1, qubit2))

    def mix_damping(self, qureg: int, qubit: int, prob: float) -> None:
        self.apply_gate(qureg, Damp(prob, qubit))

    def mix_kraus_map(self, qureg: int, targets: Sequence[int], ops: Sequence) -> None:
        self.apply_gate(qureg, Kraus(ops, *targets))

    # -- measurement ---------------------------------------------------------------

    def measure(self, qureg: int, qubit: int) -> int:
        q = self._get(qureg)
        if not 0 <= int(qubit) < q.num_qubits:
            raise ValidationError(
                ErrorCode.INVALID_QUBIT_INDEX,
                f"qubit {qubit} out of range for a {q.num_qubits}-qubit register",
            )
        return self._measure(q, int(qubit))

    def _measure(self, q: Qureg, qubit: int) -> int:
        p1 = kernels.probability_of_one(q.amps, q.num_qubits, q.is_density, qubit)
        outcome = int(self._rng.random() < p1)
        prob = p1 if outcome else 1.0 - p1
        kernels.collapse(q.amps, q.num_qubits, q.is_density, qubit, outcome, prob)
        return outcome

    # -- observables ------------------------------------------------------------

    def calc_expec_pauli_sum(self, qureg: int, hamil: PauliSum, workspace: int) -> float:
        """``<psi|H|psi>`` or ``Tr(H rho)``; ``workspace`` is overwritten."""
        q, w = self._get(qureg), self._get(workspace)
        self._require_same_shape(q, w)
        if q is w:
            raise ValidationError(
                ErrorCode.DIMENSION_MISMATCH, "workspace must differ from the measured register"
            )
        return expectation(q.amps, w.amps, q.num_qubits, q.is_density, hamil)

    def apply_pauli_sum(self, qureg_in: int, hamil: PauliSum, qureg_out: int) -> None:
        """``out <- H in`` for state vectors; ``in`` is untouched."""
        a, o = self._get(qureg_in), self._get(qureg_out)
        self._require_vector(a)
        self._require_vector(o)
        self._require_same_shape(a, o)
        o.amps[:] = apply_sum(a.amps, a.num_qubits, hamil)

    def inner_product(self, bra: int, ket: int) -> complex:
        """``<bra|ket>``."""
        a, b = self._get(bra), self._get(ket)
        self._require_vector(a)
        self._require_vector(b)
        self._require_same_shape(a, b)
        return complex(np.vdot(a.amps, b.amps))

    def calc_fidelity(self, qureg: int, pure: int) -> float:
        """``|<psi|phi>|^2`` or ``<psi|rho|psi>``; at least one register must be a vector."""
        a, b = self._get(qureg), self._get(pure)
        if a.num_qubits != b.num_qubits:
            raise ValidationError(ErrorCode.DIMENSION_MISMATCH, "registers differ in size")
        if a.is_density and b.is_density:
            raise ValidationError(
                ErrorCode.UNSUPPORTED_OPERATION, "fidelity between two density matrices"
            )
        if not a.is_density and not b.is_density:
            return float(abs(np.vdot(a.amps, b.amps)) ** 2)
        rho, psi = (a, b) if a.is_density else (b, a)
        return float(np.vdot(psi.amps, rho.matrix() @ psi.amps).real)

    @staticmethod
    def _require_vector(q: Qureg) -> None:
        if q.is_density:
            raise ValidationError(
                ErrorCode.WRONG_REGISTER_KIND, f"qureg {q.id} must be a state vector"
            )


# Methods a remote environment mirrors with identical signatures.
API = (
    "seed",
    "create_qureg",
    "create_density_qureg",
    "destroy_qureg",
    "destroy_all_quregs",
    "list_quregs",
    "get_num_qubits",
    "is_density_matrix",
    "init_zero",
    "init_plus",
    "init_classical",
    "init_pure_state",
    "init_random_pure",
    "set_qureg_matrix",
    "get_qureg_matrix",
    "clone_qureg",
    "copy_qureg",
    "set_weighted_qureg",
    "apply_gate",
    "apply_circuit",
    "mix_depolarising",
    "mix_two_qubit_depolarising",
    "mix_dephasing",
    "mix_two_qubit_dephasing",
    "mix_damping",
    "mix_kraus_map",
    "measure",
    "calc_expec_pauli_sum",
    "apply_pauli_sum",
    "inner_product",
    "calc_fidelity",
)
