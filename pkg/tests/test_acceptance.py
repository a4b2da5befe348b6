"""Numbered acceptance criteria.

Each test is tagged ``acceptance(k, title)``; the terminal summary prints one
PASS/FAIL line per criterion (see ``conftest.py``). Run alone with
``pytest tests/test_acceptance.py``.
"""

import csv
import io
import math
import time

import numpy as np
import pytest
from helpers import (
    gates,
    inject_invalid,
    random_ansatz,
    random_circuit,
    random_state,
    random_unitary_circuit,
    run_random_sequence,
)
from hypothesis import given, settings
from hypothesis import strategies as st

from qlink.bench import format_results, gen_benchmark_circuit, run_benchmark
from qlink.circuit import circuit_matrix
from qlink.demos import trotter_sweep
from qlink.env import Environment
from qlink.errors import ValidationError
from qlink.gates import Op
from qlink.observables import hamiltonian_matrix, parse_pauli_sum, transverse_pair
from qlink.remote import RemoteEnv
from qlink.trotter import (
    evolution_operator,
    heisenberg_ring,
    qdrift_circuit,
    qdrift_samples,
)
from qlink.variational import (
    ImagTimeConfig,
    Workspace,
    bind_parameters,
    layered_ansatz,
    metric_matrix,
    prepare_states,
    run_imag_time,
)
from qlink.wire import circuit_from_bytes, circuit_to_bytes, payload_size, sigma

UNITARY_OPS = {Op.X, Op.Y, Op.Z, Op.H, Op.S, Op.T, Op.SWAP, Op.Rx, Op.Ry, Op.Rz, Op.R, Op.Ph, Op.U}
TROTTER_REPS = (4, 8, 16, 32, 64)


def report(record_property, text):
    record_property("detail", text)
    print(text)


@pytest.mark.acceptance(1, "kernels equal dense circuit matrices (200 circuits, 1e-12, <30 s)")
def test_criterion_01_oracle_equivalence(record_property):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    seen = set()
    env = Environment()
    for _ in range(200):
        n = int(rng.integers(1, 5))
        circuit = random_unitary_circuit(rng, n, int(rng.integers(1, 31)))
        seen |= {g.op for g in circuit}
        psi = random_state(rng, n)
        q = env.create_qureg(n)
        env.init_pure_state(q, psi)
        env.apply_circuit(q, circuit)
        expected = circuit_matrix(circuit, n) @ psi
        worst = max(worst, float(np.max(np.abs(env.get_qureg_matrix(q) - expected))))
        env.destroy_qureg(q)
    elapsed = time.perf_counter() - start
    report(record_property, f"max error {worst:.2e}, {elapsed:.1f} s")
    assert seen == UNITARY_OPS
    assert worst <= 1e-12
    assert elapsed < 30


@pytest.mark.acceptance(2, "density evolution of a pure state equals the outer product (100 circuits, 1e-10)")
def test_criterion_02_purity_correspondence(record_property):
    rng = np.random.default_rng(202)
    env = Environment()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        circuit = random_unitary_circuit(rng, n, int(rng.integers(1, 31)))
        psi = random_state(rng, n)
        vec, rho = env.create_qureg(n), env.create_qureg(n, True)
        env.init_pure_state(vec, psi)
        env.init_pure_state(rho, psi)
        env.apply_circuit(vec, circuit)
        env.apply_circuit(rho, circuit)
        out = env.get_qureg_matrix(vec)
        worst = max(worst, float(np.max(np.abs(env.get_qureg_matrix(rho) - np.outer(out, out.conj())))))
        env.destroy_all_quregs()
    report(record_property, f"max error {worst:.2e}")
    assert worst <= 1e-10


def _two_qubit_depolarising_superoperator(p):
    """Column-stacking superoperator of ``(1-p) rho + p/15 sum P rho P`` built from Kronecker products."""
    pauli = [
        np.eye(2),
        np.array([[0, 1], [1, 0]]),
        np.array([[0, -1j], [1j, 0]]),
        np.diag([1.0, -1.0]),
    ]
    strings = [np.kron(a, b) for a in pauli for b in pauli]
    sup = (1 - p) * np.kron(np.eye(4), np.eye(4))
    for s in strings[1:]:
        sup = sup + p / 15 * np.kron(s.conj(), s)
    return sup


@pytest.mark.acceptance(3, "two-qubit depolarising drives a pure state to I/4 (p=0.1, 100 steps)")
def test_criterion_03_depolarising_fixed_point(record_property):
    p, steps = 0.1, 100
    h = transverse_pair()
    env = Environment()
    rho, work = env.create_qureg(2, True), env.create_qureg(2, True)
    env.init_random_pure(rho, 0)
    start = env.get_qureg_matrix(rho)
    hm = hamiltonian_matrix(h, 2)
    sup = _two_qubit_depolarising_superoperator(p)
    vec = start.reshape(-1, order="F")
    values = [env.calc_expec_pauli_sum(rho, h, work)]
    for _ in range(steps):
        env.mix_two_qubit_depolarising(rho, 0, 1, p)
        vec = sup @ vec
        oracle = np.trace(hm @ vec.reshape(4, 4, order="F")).real
        values.append(env.calc_expec_pauli_sum(rho, h, work))
        assert values[-1] == pytest.approx(oracle, abs=1e-12)
    final = env.get_qureg_matrix(rho)
    np.testing.assert_allclose(final, vec.reshape(4, 4, order="F"), atol=1e-12)
    distance = 0.5 * np.abs(np.linalg.eigvalsh(final - np.eye(4) / 4)).sum()
    ratios = np.array(values[1:]) / np.array(values[:-1])
    report(record_property, f"trace distance {distance:.2e}, per-step ratio {ratios.mean():.6f}")
    assert distance < 1e-4
    # traceless observables shrink by exactly 1 - 16p/15 per application
    np.testing.assert_allclose(ratios, 1 - 16 * p / 15, rtol=1e-9)
    assert all(abs(b) <= abs(a) for a, b in zip(values, values[1:]))


@pytest.mark.acceptance(4, "imaginary time reaches the ground energy of Z0 Z1 + 0.5 X0 (1e-3, <10 s)")
def test_criterion_04_imaginary_time(record_property):
    h = parse_pauli_sum("1.0 * Z 0 Z 1 + 0.5 * X 0")
    start = time.perf_counter()
    result = run_imag_time(
        layered_ansatz(2, 2),
        h,
        config=ImagTimeConfig(dt=0.1, iterations=200, regularization=1e-6, seed=0),
    )
    elapsed = time.perf_counter() - start
    ground = np.linalg.eigvalsh(hamiltonian_matrix(h, 2))[0]
    energies = np.array(result.energies)
    rise = float(np.max(np.diff(energies[5:])))
    report(
        record_property,
        f"final {energies[-1]:.10f} vs ground {ground:.10f}, max rise after 5 {rise:.1e}, {elapsed:.1f} s",
    )
    assert abs(energies[-1] - ground) <= 1e-3
    assert rise <= 1e-9
    assert elapsed < 10


@pytest.mark.acceptance(5, "analytic derivative states match central differences (20 ansatze, 1e-6)")
def test_criterion_05_derivatives(record_property):
    rng = np.random.default_rng(505)
    worst = asym = 0.0
    min_eig = np.inf
    env = Environment()
    delta = 1e-5
    for _ in range(20):
        n = int(rng.integers(1, 6))
        p = int(rng.integers(1, 13))
        ansatz = random_ansatz(rng, n, p)
        theta = rng.uniform(0, 2 * math.pi, p)
        ws = Workspace.create(env, n, p)
        prepare_states(ansatz, theta, ws)
        probe = env.create_qureg(n)

        def state(t):
            env.init_zero(probe)
            env.apply_circuit(probe, bind_parameters(ansatz, t))
            return env.get_qureg_matrix(probe)

        for j in range(p):
            e = np.zeros(p)
            e[j] = delta
            fd = (state(theta + e) - state(theta - e)) / (2 * delta)
            worst = max(worst, float(np.max(np.abs(env.get_qureg_matrix(ws.dpsi[j]) - fd))))
        a = metric_matrix(ansatz, theta, ws, prepared=True)
        asym = max(asym, float(np.max(np.abs(a - a.T))))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(a).min()))
        env.destroy_all_quregs()
    report(record_property, f"max error {worst:.1e}, asymmetry {asym:.1e}, min eigenvalue {min_eig:.1e}")
    assert worst < 1e-6
    assert asym <= 1e-10
    assert min_eig >= -1e-10


@pytest.fixture(scope="module")
def sweep():
    start = time.perf_counter()
    rows = trotter_sweep(5, 1.0, (1, 2), TROTTER_REPS, 1e-4, seed=0)
    return rows, time.perf_counter() - start


@pytest.mark.acceptance(6, "first-order Trotter error slope -2 +/- 0.3; order 2 beats order 1 (<60 s)")
def test_criterion_06_trotter_scaling(record_property, sweep):
    rows, elapsed = sweep
    first = {r[1]: r[3] for r in rows if r[0] == 1}
    second = {r[1]: r[3] for r in rows if r[0] == 2}
    reps = np.array(TROTTER_REPS, dtype=float)
    deficits = np.array([1 - first[r] for r in TROTTER_REPS])
    slope = np.polyfit(np.log(reps), np.log(deficits), 1)[0]
    report(record_property, f"slope {slope:.3f}, sweep {elapsed:.1f} s")
    assert -2.3 <= slope <= -1.7
    assert all(second[r] >= first[r] for r in TROTTER_REPS if r >= 8)
    assert elapsed < 60


@pytest.mark.acceptance(7, "noise lowers Trotter fidelity; order-1 noisy fidelity peaks within r <= 64")
def test_criterion_07_noisy_trotter(record_property, sweep):
    rows, _ = sweep
    assert all(noisy <= clean for _, _, _, clean, noisy in rows)
    noisy = [r[4] for r in rows if r[0] == 1]
    peak = int(np.argmax(noisy))
    report(record_property, f"order-1 noisy peak at r={TROTTER_REPS[peak]} ({noisy[peak]:.4f}), r=64 {noisy[-1]:.4f}")
    assert 0 < peak < len(noisy) - 1
    assert noisy[-1] < noisy[peak]


@pytest.mark.acceptance(8, "qDRIFT frequencies within 3 sigma over 1e5 draws; single term exact (1e-12)")
def test_criterion_08_qdrift(record_property):
    ring = heisenberg_ring(5, 0)
    draws = 100_000
    weights = np.array([abs(c) for c, _ in ring.terms])
    probs = weights / weights.sum()
    counts = np.bincount(qdrift_samples(ring, draws, seed=0), minlength=len(probs))
    z = (counts - draws * probs) / np.sqrt(draws * probs * (1 - probs))
    single = parse_pauli_sum("0.37 * X 0 Z 1")
    c = qdrift_circuit(single, 2.0, 40, seed=1)
    err = float(np.max(np.abs(circuit_matrix(c, 2) - evolution_operator(single, 2.0, 2))))
    report(record_property, f"max |z| {np.max(np.abs(z)):.2f}, single-term error {err:.1e}")
    assert np.all(np.abs(z) <= 3)
    assert err <= 1e-12


@settings(max_examples=500, deadline=None, derandomize=True)
@given(st.lists(gates(), min_size=1, max_size=25).filter(lambda c: any(g.op in (Op.U, Op.Kraus) for g in c)))
def _round_trip(circuit):
    assert circuit_from_bytes(circuit_to_bytes(circuit)) == circuit


@pytest.mark.acceptance(9, "wire round trip (500 circuits), payload <= 8 sigma, loopback bit-identical (100 runs)")
def test_criterion_09_wire_protocol(record_property, server):
    _round_trip()
    c = gen_benchmark_circuit(15, 50, seed=0)
    s = 4350 + sum(len(g.controls) + len(g.targets) + len(g.params) for g in c)
    assert s == sigma(c)
    size = payload_size(c)
    mismatches = 0
    for seed in range(100):
        # a fresh session per run so register ids restart like a fresh local environment
        local = run_random_sequence(Environment(), seed)
        with RemoteEnv(*server.address) as remote:
            mismatches += run_random_sequence(remote, seed) != local
    report(record_property, f"payload {size} B vs 8 sigma = {8 * s} B, {mismatches} mismatching runs")
    assert size <= 8 * s
    assert mismatches == 0


@pytest.mark.acceptance(10, "benchmark has 87r gates; mean runtime non-decreasing over r = 1, 10, ..., 50")
def test_criterion_10_benchmark(record_property):
    for r in (1, 10, 20, 30, 40, 50):
        assert len(gen_benchmark_circuit(15, r, seed=r)) == 87 * r
    results = run_benchmark(15, [1, 10, 20, 30, 40, 50], trials=3, seed=0)
    rows = list(csv.DictReader(io.StringIO(format_results(results))))
    means = [float(row["mean_s"]) for row in rows]
    report(record_property, "means " + ", ".join(f"{m * 1e3:.0f}" for m in means) + " ms")
    assert [int(row["gates"]) for row in rows] == [87 * r for r in (1, 10, 20, 30, 40, 50)]
    assert all(b >= a for a, b in zip(means, means[1:]))


@pytest.mark.acceptance(11, "a rejected circuit leaves the register bit-identical (200 fuzzed, local and remote)")
def test_criterion_11_atomicity(record_property, remote):
    rng = np.random.default_rng(1111)
    checked = 0
    for env in (Environment(), remote):
        for _ in range(200):
            n = int(rng.integers(1, 5))
            density = bool(rng.random() < 0.5)
            q = env.create_qureg(n, density)
            env.init_random_pure(q, int(rng.integers(1 << 30)))
            env.apply_circuit(q, random_circuit(rng, n, 5, channels=density))
            before = env.get_qureg_matrix(q)
            circuit, pos = inject_invalid(rng, random_circuit(rng, n, 20, channels=density, measure=True), n, density)
            with pytest.raises(ValidationError) as err:
                env.apply_circuit(q, circuit)
            assert err.value.gate_index == pos
            assert env.get_qureg_matrix(q).tobytes() == before.tobytes()
            env.destroy_qureg(q)
            checked += 1
    report(record_property, f"{checked} rejected circuits, all registers unchanged")
