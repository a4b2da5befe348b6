"""Parameterised ansatz circuits and variational imaginary-time evolution.

Derivative states are formed exactly by inserting each rotation's Pauli
generator after the differentiated gate, so only unitary gates and weighted
register sums are needed; the routines therefore run unchanged against a
remote environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from qlink.circuit import Circuit
from qlink.env import Environment, make_rng
from qlink.gates import ROTATION_OPS, Gate, Op, Param, R, Rx, Ry, Rz, generator_paulis
from qlink.observables import PauliSum


class AnsatzError(ValueError):
    pass


@dataclass
class Ansatz:
    """A circuit whose rotation angles may be slots ``θ1 .. θP``."""

    template: Circuit
    param_count: int

    def __post_init__(self):
        if not isinstance(self.template, Circuit):
            self.template = Circuit(list(self.template))
        seen = set()
        for gate in self.template:
            for p in gate.params:
                if not isinstance(p, Param):
                    continue
                if gate.op not in ROTATION_OPS:
                    raise AnsatzError(f"slot {p} sits on a {gate.op.name} gate")
                if gate.controls:
                    raise AnsatzError(f"slot {p} sits on a controlled gate")
                if not 1 <= p.index <= self.param_count:
                    raise AnsatzError(f"slot {p} outside 1..{self.param_count}")
                seen.add(p.index)
        missing = set(range(1, self.param_count + 1)) - seen
        if missing:
            raise AnsatzError(f"slots never used: {sorted(missing)}")

    @classmethod
    def from_circuit(cls, circuit: Circuit) -> Ansatz:
        """Infer the parameter count from the highest slot index."""
        return cls(circuit, max(circuit.parameter_slots, default=0))

    @property
    def num_qubits(self) -> int:
        return self.template.span

    def occurrences(self, j: int) -> list[int]:
        """Gate positions carrying slot ``j``."""
        return [i for i, g in enumerate(self.template) if Param(j) in g.params]


def bind_parameters(ansatz: Ansatz, theta: Sequence[float]) -> Circuit:
    """Concrete circuit with every slot ``θk`` replaced by ``theta[k-1]``."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != ansatz.param_count:
        raise AnsatzError(f"expected {ansatz.param_count} parameters, got {theta.size}")
    gates = []
    for g in ansatz.template:
        if g.is_symbolic:
            params = tuple(
                float(theta[p.index - 1]) if isinstance(p, Param) else p for p in g.params
            )
            g = Gate(g.op, g.targets, g.controls, params, g.paulis, g.matrix, g.kraus)
        gates.append(g)
    return Circuit(gates, ansatz.template.num_qubits)


def layered_ansatz(num_qubits: int, depth: int) -> Ansatz:
    """Rx, Ry, Rz on every qubit then a two-qubit Pauli rotation per neighbour pair.

    The pair rotations cycle through XX, YY, ZZ. Parameter count is
    ``depth * (3n + n - 1)``.
    """
    if depth < 1:
        raise AnsatzError("depth must be at least 1")
    gates = []
    k = 0
    pair = 0

    def slot():
        nonlocal k
        k += 1
        return Param(k)

    for _ in range(depth):
        for q in range(num_qubits):
            gates += [Rx(slot(), q), Ry(slot(), q), Rz(slot(), q)]
        for q in range(num_qubits - 1):
            axis = "XYZ"[pair % 3]
            pair += 1
            gates.append(R(slot(), [(axis, q), (axis, q + 1)]))
    return Ansatz(Circuit(gates, num_qubits), k)


def _pauli_gates(axes: Sequence[str], targets: Sequence[int]) -> list[Gate]:
    return [Gate(Op[a], (t,)) for a, t in zip(axes, targets) if a != "I"]


def derivative_state(
    env, ansatz: Ansatz, theta: Sequence[float], j: int, out: int, base: int
) -> None:
    """Write ``d|psi(theta)>/d theta_j`` into register ``out``.

    ``base`` holds the ansatz input state and is left untouched. A slot used
    by several gates contributes one inserted-generator term per use.
    """
    if not 1 <= j <= ansatz.param_count:
        raise AnsatzError(f"parameter index {j} outside 1..{ansatz.param_count}")
    bound = bind_parameters(ansatz, theta).gates
    terms = []
    for i in ansatz.occurrences(j):
        gate = ansatz.template[i]
        for coeff, axes in generator_paulis(gate):
            inserted = bound[: i + 1] + _pauli_gates(axes, gate.targets) + bound[i + 1 :]
            terms.append((coeff, inserted))

    coeff, gates = terms[0]
    env.copy_qureg(out, base)
    env.apply_circuit(out, gates)
    env.set_weighted_qureg(0, out, 0, out, coeff, out)
    if len(terms) == 1:
        return
    work = env.clone_qureg(base)
    try:
        for coeff, gates in terms[1:]:
            env.copy_qureg(work, base)
            env.apply_circuit(work, gates)
            env.set_weighted_qureg(coeff, work, 0, work, 1, out)
    finally:
        env.destroy_qureg(work)


@dataclass
class Workspace:
    """Registers used by the imaginary-time routines.

    ``psi`` holds the ansatz output, ``hpsi`` the Hamiltonian applied to it,
    ``phi`` is scratch space and ``dpsi[k]`` the derivative for slot ``k+1``.
    """

    env: object
    base: int
    psi: int
    hpsi: int
    phi: int
    dpsi: list[int] = field(default_factory=list)

    @classmethod
    def create(cls, env, num_qubits: int, param_count: int, base_state=None) -> Workspace:
        base = env.create_qureg(num_qubits)
        if base_state is not None:
            env.init_pure_state(base, base_state)
        ids = [env.create_qureg(num_qubits) for _ in range(3 + param_count)]
        return cls(env, base, ids[0], ids[1], ids[2], ids[3:])

    def release(self) -> None:
        for q in [self.base, self.psi, self.hpsi, self.phi, *self.dpsi]:
            self.env.destroy_qureg(q)


def prepare_states(ansatz: Ansatz, theta: Sequence[float], ws: Workspace) -> None:
    """Fill ``ws.psi`` and every ``ws.dpsi`` for the given parameters."""
    if len(ws.dpsi) < ansatz.param_count:
        raise AnsatzError("workspace has too few derivative registers")
    env = ws.env
    env.copy_qureg(ws.psi, ws.base)
    env.apply_circuit(ws.psi, bind_parameters(ansatz, theta))
    for j in range(1, ansatz.param_count + 1):
        derivative_state(env, ansatz, theta, j, ws.dpsi[j - 1], ws.base)


def metric_matrix(
    ansatz: Ansatz, theta: Sequence[float], ws: Workspace, prepared: bool = False
) -> np.ndarray:
    """``A_ij = Re <d_i psi | d_j psi>``, symmetric by construction."""
    if not prepared:
        prepare_states(ansatz, theta, ws)
    p = ansatz.param_count
    a = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            a[i, j] = a[j, i] = ws.env.inner_product(ws.dpsi[i], ws.dpsi[j]).real
    return a


def gradient_vector(
    ansatz: Ansatz, theta: Sequence[float], h: PauliSum, ws: Workspace, prepared: bool = False
) -> np.ndarray:
    """``C_i = -Re <psi| H |d_i psi>``, i.e. minus half the energy gradient."""
    if not prepared:
        prepare_states(ansatz, theta, ws)
    env = ws.env
    env.apply_pauli_sum(ws.psi, h, ws.hpsi)
    return np.array(
        [-env.inner_product(ws.hpsi, ws.dpsi[i]).real for i in range(ansatz.param_count)]
    )


def imag_time_step(
    theta: Sequence[float], a: np.ndarray, c: np.ndarray, dt: float, reg: float = 1e-6
) -> np.ndarray:
    """``theta + dt * (A + reg I)^-1 C`` by a symmetric direct solve."""
    if reg < 0:
        raise ValueError("regularisation must be non-negative")
    a = np.asarray(a, dtype=float)
    lhs = a + reg * np.eye(len(a))
    try:
        step = scipy.linalg.solve(lhs, np.asarray(c, dtype=float), assume_a="sym")
    except np.linalg.LinAlgError as err:
        cond = np.linalg.cond(lhs)
        raise np.linalg.LinAlgError(
            f"imaginary-time solve failed (condition number {cond:.3g}): {err}"
        ) from err
    if not np.all(np.isfinite(step)):
        raise np.linalg.LinAlgError(
            f"imaginary-time solve produced non-finite values "
            f"(condition number {np.linalg.cond(lhs):.3g})"
        )
    return np.asarray(theta, dtype=float) + dt * step


@dataclass(frozen=True)
class ImagTimeConfig:
    dt: float = 0.1
    iterations: int = 100
    regularization: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.regularization < 0:
            raise ValueError("regularization must be non-negative")


@dataclass
class ImagTimeResult:
    theta: np.ndarray
    energies: list[float]
    grad_norms: list[float]

    def __iter__(self):
        # unpacks as (theta, energies)
        return iter((self.theta, self.energies))

    def rows(self):
        """CSV rows ``(iteration, energy, |C|)``."""
        return list(zip(range(len(self.energies)), self.energies, self.grad_norms))


def initial_parameters(param_count: int, seed: int) -> np.ndarray:
    return make_rng(seed).uniform(0.0, 2 * math.pi, param_count)


def run_imag_time(
    ansatz: Ansatz,
    h: PauliSum,
    theta0: Sequence[float] | None = None,
    config: ImagTimeConfig = ImagTimeConfig(),
    env=None,
    base_state=None,
) -> ImagTimeResult:
    """Iterate metric, gradient and update, recording the energy at every step.

    Starts from ``theta0`` (uniform in [0, 2π) from ``config.seed`` when
    omitted) with the ansatz applied to ``|0..0>`` or ``base_state``.
    """
    env = Environment() if env is None else env
    n = max(ansatz.num_qubits, h.num_qubits)
    theta = (
        initial_parameters(ansatz.param_count, config.seed)
        if theta0 is None
        else np.array(theta0, dtype=float)
    )
    ws = Workspace.create(env, n, ansatz.param_count, base_state)
    energies, norms = [], []
    try:
        for k in range(config.iterations + 1):
            prepare_states(ansatz, theta, ws)
            energies.append(env.calc_expec_pauli_sum(ws.psi, h, ws.phi))
            c = gradient_vector(ansatz, theta, h, ws, prepared=True)
            norms.append(float(np.linalg.norm(c)))
            if k == config.iterations:
                break
            a = metric_matrix(ansatz, theta, ws, prepared=True)
            theta = imag_time_step(theta, a, c, config.dt, config.regularization)
    finally:
        ws.release()
    return ImagTimeResult(theta, energies, norms)
