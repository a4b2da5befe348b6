"""Hamiltonian-evolution circuits: Suzuki-Trotter, randomised ordering, qDRIFT.

Every term ``c P`` of a Pauli sum becomes the rotation ``R[2 c x](P)``, i.e.
``exp(-i c x P)`` for an evolution slice ``x``, using ``R(θ, P) = exp(-iθP/2)``.
Single-factor strings are emitted as ``Rx``/``Ry``/``Rz``. Identity terms only
contribute a global phase and are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qlink.circuit import Circuit, PauliString
from qlink.env import make_rng
from qlink.errors import ErrorCode, ValidationError
from qlink.gates import Depol, Gate, Op, R
from qlink.observables import PauliSum, hamiltonian_matrix


def heisenberg_ring(num_qubits: int, seed: int) -> PauliSum:
    """Periodic Heisenberg ring with a random z field.

    Terms are ``X_j X_{j+1}``, ``Y_j Y_{j+1}``, ``Z_j Z_{j+1}`` for every ``j``
    (indices mod n, unit couplings) followed by ``r_j Z_j`` with ``r_j`` drawn
    uniformly from [-1, 1].
    """
    if num_qubits < 3:
        raise ValueError("a Heisenberg ring needs at least 3 qubits")
    n = num_qubits
    terms = []
    for j in range(n):
        k = (j + 1) % n
        for axis in "XYZ":
            terms.append((1.0, PauliString(((axis, j), (axis, k)))))
    fields = make_rng(seed).uniform(-1.0, 1.0, n)
    terms += [(float(r), PauliString((("Z", j),))) for j, r in enumerate(fields)]
    return PauliSum(terms)


def _pauli_terms(h: PauliSum) -> list[tuple[float, PauliString]]:
    return [(c, s) for c, s in h.terms if s is not None]


def evolution_gate(string: PauliString, angle: float) -> Gate:
    """``exp(-i angle/2 P)`` for the Pauli string ``P``."""
    if len(string.factors) == 1:
        (axis, q), = string.factors
        return Gate(Op[f"R{axis.lower()}"], (q,), params=(angle,))
    return R(angle, string)


@dataclass(frozen=True)
class EvolutionSpec:
    """Target ``exp(-i H t)`` approximated by ``reps`` repetitions of an order-``order`` formula."""

    hamiltonian: PauliSum
    time: float
    order: int = 1
    reps: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.order < 1 or (self.order > 1 and self.order % 2):
            raise ValueError(f"order must be 1 or even, got {self.order}")


def suzuki_coefficient(order: int) -> float:
    """``p_k = 1 / (4 - 4^(1/(2k-1)))`` for ``order = 2k``."""
    return 1.0 / (4.0 - 4.0 ** (1.0 / (order - 1)))


def _suzuki(terms, x: float, order: int) -> list[tuple[PauliString, float]]:
    """(string, time-slice) sequence of the order-``order`` formula for slice ``x``."""
    if order == 1:
        return [(s, c * x) for c, s in terms]
    if order == 2:
        half = [(s, c * x / 2) for c, s in terms]
        return half + half[::-1]
    p = suzuki_coefficient(order)
    outer = _suzuki(terms, p * x, order - 2)
    inner = _suzuki(terms, (1 - 4 * p) * x, order - 2)
    return outer + outer + inner + outer + outer


def _merge(sequence: list[tuple[PauliString, float]]) -> list[tuple[PauliString, float]]:
    # neighbouring exponentials of one string commute and add exactly
    out: list[tuple[PauliString, float]] = []
    for s, x in sequence:
        if out and out[-1][0] == s:
            out[-1] = (s, out[-1][1] + x)
        else:
            out.append((s, x))
    return out


def trotter_circuit(spec: EvolutionSpec) -> Circuit:
    """Deterministic Suzuki-Trotter circuit for ``spec``.

    Order 1 is the plain product in term order, order 2 its symmetrised
    half-step form and higher even orders follow Suzuki's recursion
    ``S_2k(x) = S_2k-2(p x)^2 S_2k-2((1-4p) x) S_2k-2(p x)^2``. Adjacent
    rotations about the same string are fused.
    """
    terms = _pauli_terms(spec.hamiltonian)
    x = spec.time / spec.reps
    sequence = _suzuki(terms, x, spec.order) * spec.reps
    gates = [evolution_gate(s, 2 * t) for s, t in _merge(sequence)]
    return Circuit(gates, spec.hamiltonian.num_qubits or None)


def randomized_trotter_circuit(spec: EvolutionSpec, seed: int) -> Circuit:
    """First-order circuit whose term order is reshuffled every repetition."""
    if spec.order != 1:
        raise ValueError("randomised ordering is defined for first order only")
    terms = _pauli_terms(spec.hamiltonian)
    rng = make_rng(seed)
    x = spec.time / spec.reps
    gates = []
    for _ in range(spec.reps):
        for k in rng.permutation(len(terms)):
            c, s = terms[k]
            gates.append(evolution_gate(s, 2 * c * x))
    return Circuit(gates, spec.hamiltonian.num_qubits or None)


def qdrift_samples(h: PauliSum, count: int, seed: int) -> np.ndarray:
    """Indices into the non-identity terms of ``h``, drawn with weight ``|c_k|``.

    Uses inverse-CDF sampling over the cumulative magnitudes.
    """
    terms = _pauli_terms(h)
    weights = np.array([abs(c) for c, _ in terms])
    lam = weights.sum()
    if not terms or lam <= 0:
        raise ValueError("qDRIFT needs a Hamiltonian with non-zero Pauli terms")
    cdf = np.cumsum(weights) / lam
    cdf[-1] = 1.0
    u = make_rng(seed).random(count)
    return np.searchsorted(cdf, u, side="right")


def qdrift_circuit(h: PauliSum, time: float, count: int, seed: int) -> Circuit:
    """``count`` rotations ``R[2 sign(c_k) λ t / N](P_k)`` with ``k`` sampled by ``|c_k| / λ``.

    ``λ`` sums the magnitudes of the non-identity terms only.
    """
    if count < 1:
        raise ValueError("qDRIFT needs at least one gate")
    terms = _pauli_terms(h)
    idx = qdrift_samples(h, count, seed)
    lam = sum(abs(c) for c, _ in terms)
    step = lam * time / count
    gates = []
    for k in idx:
        c, s = terms[k]
        gates.append(evolution_gate(s, 2 * math.copysign(step, c)))
    return Circuit(gates, h.num_qubits or None)


def noisify_circuit(circuit: Circuit | Sequence[Gate], prob: float) -> Circuit:
    """Follow every unitary gate with depolarising noise of strength ``prob`` on its targets."""
    if not 0 <= prob <= 3 / 4:
        raise ValidationError(
            ErrorCode.PROBABILITY_OUT_OF_RANGE, f"depolarising probability {prob} outside [0, 0.75]"
        )
    gates = []
    for i, gate in enumerate(circuit):
        gates.append(gate)
        if not gate.is_unitary:
            continue
        if len(gate.targets) > 2:
            raise ValidationError(
                ErrorCode.UNSUPPORTED_OPERATION,
                f"cannot noisify a {len(gate.targets)}-target gate",
                i,
            )
        gates.append(Depol(prob, *gate.targets))
    return Circuit(gates, getattr(circuit, "num_qubits", None))


def evolution_operator(h: PauliSum, time: float, num_qubits: int) -> np.ndarray:
    """``exp(-i H t)`` by Hermitian eigendecomposition."""
    matrix = hamiltonian_matrix(h, num_qubits)
    evals, evecs = np.linalg.eigh(matrix)
    return (evecs * np.exp(-1j * time * evals)) @ evecs.conj().T


def exact_evolution(env, h: PauliSum, time: float, qureg: int) -> None:
    """Replace a state vector ``psi`` with ``exp(-i H t) psi``."""
    if env.is_density_matrix(qureg):
        raise ValidationError(ErrorCode.WRONG_REGISTER_KIND, "exact evolution needs a state vector")
    n = env.get_num_qubits(qureg)
    psi = env.get_qureg_matrix(qureg)
    env.set_qureg_matrix(qureg, evolution_operator(h, time, n) @ psi)
