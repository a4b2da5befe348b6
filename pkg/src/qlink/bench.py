"""Random rotation-layer benchmark circuits and a whole-circuit timing harness."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from qlink.circuit import Circuit
from qlink.env import Environment, make_rng
from qlink.gates import Gate, Op

_AXES = (Op.Rx, Op.Ry, Op.Rz)


def gates_per_rep(num_qubits: int) -> int:
    """``3n`` single-qubit rotations plus ``3(n-1)`` controlled rotations."""
    return 3 * num_qubits + 3 * (num_qubits - 1)


def gen_benchmark_circuit(num_qubits: int, reps: int, seed) -> Circuit:
    """Repeated layers of random rotations and nearest-neighbour controlled rotations.

    Each repetition applies Rx, Ry and Rz with angles uniform in [0, 4π) to
    every qubit, then controlled Rx, Ry and Rz (control ``j``, target ``j+1``)
    on the even pairs followed by the odd pairs.

    Args:
        num_qubits: register size, at least 2.
        reps: number of repetitions.
        seed: anything accepted by :func:`qlink.env.make_rng`.
    """
    if num_qubits < 2:
        raise ValueError("benchmark circuits need at least 2 qubits")
    if reps < 0:
        raise ValueError("reps must be non-negative")
    rng = make_rng(seed)
    n = num_qubits
    pairs = [j for j in range(0, n - 1, 2)] + [j for j in range(1, n - 1, 2)]
    gates = []
    for _ in range(reps):
        angles = rng.uniform(0.0, 4 * math.pi, gates_per_rep(n))
        k = 0
        for q in range(n):
            for op in _AXES:
                gates.append(Gate(op, (q,), params=(angles[k],)))
                k += 1
        for j in pairs:
            for op in _AXES:
                gates.append(Gate(op, (j + 1,), (j,), params=(angles[k],)))
                k += 1
    return Circuit(gates, n)


@dataclass(frozen=True)
class BenchmarkResult:
    reps: int
    gate_count: int
    mean_seconds: float
    stddev_seconds: float
    trials: int

    def row(self) -> tuple:
        return (self.reps, self.gate_count, self.mean_seconds, self.stddev_seconds, self.trials)


CSV_HEADER = ("reps", "gates", "mean_s", "stddev_s", "trials")


def run_benchmark(
    num_qubits: int,
    reps_list: Iterable[int],
    trials: int = 10,
    seed: int = 0,
    env=None,
) -> list[BenchmarkResult]:
    """Time ``trials`` fresh executions of the benchmark circuit for every reps value.

    Every trial draws new angles (seeded by ``(seed, reps, trial)``), resets a
    state vector to ``|0...0>`` and times only the ``apply_circuit`` call with
    a monotonic clock. ``env`` may be local or remote.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    env = Environment() if env is None else env
    qureg = env.create_qureg(num_qubits)
    results = []
    try:
        for reps in reps_list:
            times = []
            for trial in range(trials):
                circuit = gen_benchmark_circuit(num_qubits, reps, [seed, reps, trial])
                env.init_zero(qureg)
                start = time.perf_counter()
                env.apply_circuit(qureg, circuit)
                times.append(time.perf_counter() - start)
            std = float(np.std(times, ddof=1)) if trials > 1 else 0.0
            results.append(
                BenchmarkResult(reps, reps * gates_per_rep(num_qubits), float(np.mean(times)), std, trials)
            )
    finally:
        env.destroy_qureg(qureg)
    return results


def format_results(results: Sequence[BenchmarkResult], fmt: str = "csv") -> str:
    """CSV with columns ``reps,gates,mean_s,stddev_s,trials`` or a JSON list."""
    if fmt == "json":
        return json.dumps([asdict(r) for r in results], indent=2)
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in results:
        writer.writerow(r.row())
    return buf.getvalue()
