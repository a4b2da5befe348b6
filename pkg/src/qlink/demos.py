"""The three worked demonstrations as functions returning table rows.

Each function takes an environment (local or remote) so the same code runs
against a server.
"""

from __future__ import annotations

from typing import Iterable

from qlink.env import Environment
from qlink.observables import PauliSum, transverse_pair
from qlink.trotter import (
    EvolutionSpec,
    exact_evolution,
    heisenberg_ring,
    noisify_circuit,
    trotter_circuit,
)
from qlink.variational import ImagTimeConfig, layered_ansatz, run_imag_time

DEPOL_COLUMNS = ("step", "expectation")
IMAGTIME_COLUMNS = ("iteration", "energy", "grad_norm")
TROTTER_COLUMNS = ("order", "reps", "gateCount", "fidelity", "noisyFidelity")


def depolarising_decay(
    prob: float = 0.1, steps: int = 100, seed: int = 0, h: PauliSum | None = None, env=None
) -> list[tuple[int, float]]:
    """Expectation of ``h`` after each of ``steps`` two-qubit depolarising channels.

    The density matrix starts in a random pure state drawn from ``seed``;
    ``h`` defaults to ``Z0 Z1 + 0.5 X0``.
    """
    env = Environment(seed) if env is None else env
    h = transverse_pair() if h is None else h
    rho = env.create_density_qureg(2)
    work = env.create_density_qureg(2)
    try:
        env.init_random_pure(rho, seed)
        rows = []
        for step in range(1, steps + 1):
            env.mix_two_qubit_depolarising(rho, 0, 1, prob)
            rows.append((step, env.calc_expec_pauli_sum(rho, h, work)))
    finally:
        env.destroy_qureg(rho)
        env.destroy_qureg(work)
    return rows


def imag_time_demo(
    dt: float = 0.1,
    iterations: int = 200,
    seed: int = 0,
    depth: int = 2,
    h: PauliSum | None = None,
    env=None,
) -> list[tuple[int, float, float]]:
    """Variational imaginary time on ``h`` (default ``Z0 Z1 + 0.5 X0``) with a layered ansatz."""
    h = transverse_pair() if h is None else h
    ansatz = layered_ansatz(max(h.num_qubits, 1), depth)
    config = ImagTimeConfig(dt=dt, iterations=iterations, seed=seed)
    return run_imag_time(ansatz, h, config=config, env=env).rows()


def trotter_sweep(
    num_qubits: int = 5,
    time: float = 1.0,
    orders: Iterable[int] = (1, 2),
    reps_list: Iterable[int] = (1, 2, 4, 8, 16, 32, 64),
    prob: float = 1e-4,
    seed: int = 0,
    h: PauliSum | None = None,
    env=None,
) -> list[tuple[int, int, int, float, float]]:
    """Fidelity with exact evolution of noiseless and depolarised Trotter circuits.

    The Hamiltonian defaults to a Heisenberg ring with fields drawn from
    ``seed``; the initial state is a random pure state from ``seed + 1``.
    Noisy fidelity is ``<psi_exact| rho |psi_exact>`` after every gate is
    followed by depolarising noise of strength ``prob``.
    """
    env = Environment(seed) if env is None else env
    h = heisenberg_ring(num_qubits, seed) if h is None else h
    n = max(num_qubits, h.num_qubits)
    psi0 = env.create_qureg(n)
    exact = env.create_qureg(n)
    psi = env.create_qureg(n)
    rho = env.create_density_qureg(n)
    rows = []
    try:
        env.init_random_pure(psi0, seed + 1)
        start = env.get_qureg_matrix(psi0)
        env.copy_qureg(exact, psi0)
        exact_evolution(env, h, time, exact)
        for order in orders:
            for reps in reps_list:
                circuit = trotter_circuit(EvolutionSpec(h, time, order, reps))
                env.copy_qureg(psi, psi0)
                env.apply_circuit(psi, circuit)
                fidelity = env.calc_fidelity(psi, exact)
                env.init_pure_state(rho, start)
                env.apply_circuit(rho, noisify_circuit(circuit, prob))
                noisy = env.calc_fidelity(rho, exact)
                rows.append((order, reps, len(circuit), fidelity, noisy))
    finally:
        for q in (psi0, exact, psi, rho):
            env.destroy_qureg(q)
    return rows
