"""Random circuit generators and dense reference implementations for the tests.

The reference routines here deliberately avoid the package's kernels and
its ``embed_matrix``: operators are expanded by explicit loops over basis
states so that disagreements point at the code under test.
"""

import itertools
import math

import numpy as np
from hypothesis import strategies as st

from qlink.gates import Gate, Kraus, Op, Param

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

FIXED_1Q = [Op.X, Op.Y, Op.Z, Op.H, Op.S, Op.T]
ROT_1Q = [Op.Rx, Op.Ry, Op.Rz, Op.Ph]


def random_unitary(rng, dim):
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / abs(d))


def random_kraus(rng, dim, count):
    """Kraus operators of a random channel, cut from a random isometry."""
    v = random_unitary(rng, dim * count)[:, :dim]
    return [v[k * dim : (k + 1) * dim] for k in range(count)]


def random_state(rng, n):
    psi = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return psi / np.linalg.norm(psi)


def random_density(rng, n, rank=3):
    dim = 2**n
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_unitary_gate(rng, n, max_controls=2, max_targets=3):
    """Any unitary opcode on distinct random qubits of an ``n``-qubit register."""
    ops = FIXED_1Q + ROT_1Q + [Op.R, Op.U] + ([Op.SWAP] if n >= 2 else [])
    op = ops[rng.integers(len(ops))]
    if op is Op.SWAP:
        k = 2
    elif op in (Op.R, Op.U):
        k = int(rng.integers(1, min(max_targets, n) + 1))
    else:
        k = 1
    free = n - k
    c = int(rng.integers(0, min(max_controls, free) + 1)) if free else 0
    qubits = rng.permutation(n)[: k + c].tolist()
    targets, controls = qubits[:k], qubits[k:]
    angle = float(rng.uniform(-2 * math.pi, 2 * math.pi))
    if op is Op.R:
        axes = [("X", "Y", "Z")[i] for i in rng.integers(0, 3, k)]
        return Gate(op, targets, controls, (angle,), paulis=axes)
    if op is Op.U:
        return Gate(op, targets, controls, matrix=random_unitary(rng, 2**k))
    if op in ROT_1Q:
        return Gate(op, targets, controls, (angle,))
    return Gate(op, targets, controls)


def random_unitary_circuit(rng, n, depth):
    return [random_unitary_gate(rng, n) for _ in range(depth)]


def random_channel_gate(rng, n):
    op = [Op.Depol, Op.Deph, Op.Damp, Op.Kraus][rng.integers(4)]
    k = 1 if op is Op.Damp or n < 2 else int(rng.integers(1, 3))
    targets = rng.permutation(n)[:k].tolist()
    if op is Op.Kraus:
        return Gate(op, targets, kraus=random_kraus(rng, 2**k, int(rng.integers(1, 4))))
    cap = {(Op.Depol, 1): 0.75, (Op.Depol, 2): 15 / 16, (Op.Deph, 1): 0.5, (Op.Deph, 2): 0.75}
    return Gate(op, targets, params=(float(rng.uniform(0, cap.get((op, k), 1.0))),))


def random_circuit(rng, n, depth, channels=True, measure=False):
    gates = []
    for _ in range(depth):
        u = rng.random()
        if channels and u < 0.25:
            gates.append(random_channel_gate(rng, n))
        elif measure and u < 0.3:
            gates.append(Gate(Op.M, (int(rng.integers(n)),)))
        else:
            gates.append(random_unitary_gate(rng, n))
    return gates


# -- dense references ---------------------------------------------------------------


def expand(op, targets, controls, n):
    """Full ``2^n`` matrix of ``op`` on ``targets`` conditioned on ``controls``.

    Bit ``j`` of the small matrix index refers to ``targets[j]``; qubit ``q``
    of a basis index ``b`` is ``(b >> q) & 1``.
    """
    dim = 2**n
    k = len(targets)
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        if not all((col >> c) & 1 for c in controls):
            full[col, col] = 1
            continue
        sub_col = sum(((col >> t) & 1) << j for j, t in enumerate(targets))
        rest = col
        for t in targets:
            rest &= ~(1 << t)
        for sub_row in range(2**k):
            row = rest
            for j, t in enumerate(targets):
                row |= ((sub_row >> j) & 1) << t
            full[row, col] += op[sub_row, sub_col]
    return full


def pauli_matrix(factors, n):
    """Dense Pauli string from ``(axis, qubit)`` pairs by Kronecker products."""
    axes = ["I"] * n
    for a, q in factors:
        axes[q] = a
    out = np.eye(1, dtype=complex)
    for q in range(n):  # qubit 0 is least significant, so it goes last
        out = np.kron(PAULI[axes[q]], out)
    return out


def pauli_sum_matrix(h, n):
    out = np.zeros((2**n, 2**n), dtype=complex)
    for coeff, string in h.terms:
        out += coeff * pauli_matrix(() if string is None else string.factors, n)
    return out


def apply_kraus_dense(rho, kraus, targets, n):
    out = np.zeros_like(rho)
    for k in kraus:
        big = expand(k, targets, [], n)
        out += big @ rho @ big.conj().T
    return out


def all_pauli_strings(k):
    return list(itertools.product("IXYZ", repeat=k))


# -- hypothesis strategies ---------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@st.composite
def gates(draw):
    """Any opcode with random operands on a 6-qubit register; parameters may be slots."""
    n = 6
    qubits = draw(st.permutations(range(n)))
    op = draw(st.sampled_from(list(Op)))
    if op in (Op.R, Op.U, Op.Kraus, Op.Depol, Op.Deph):
        k = draw(st.integers(1, 2))
    elif op is Op.SWAP:
        k = 2
    else:
        k = 1
    targets = qubits[:k]
    controls = []
    if op not in (Op.M, Op.Depol, Op.Deph, Op.Damp, Op.Kraus):
        controls = qubits[k : k + draw(st.integers(0, 2))]
    param = st.one_of(finite, st.integers(1, 40).map(Param))
    if op is Op.R:
        axes = draw(st.lists(st.sampled_from("XYZ"), min_size=k, max_size=k))
        return Gate(op, targets, controls, (draw(param),), paulis=axes)
    if op is Op.U:
        seed = draw(st.integers(0, 2**32 - 1))
        return Gate(op, targets, controls, matrix=random_unitary(np.random.default_rng(seed), 2**k))
    if op is Op.Kraus:
        seed = draw(st.integers(0, 2**32 - 1))
        ops = random_kraus(np.random.default_rng(seed), 2**k, draw(st.integers(1, 3)))
        return Kraus(ops, *targets)
    if op in (Op.Rx, Op.Ry, Op.Rz, Op.Ph, Op.Depol, Op.Deph, Op.Damp):
        return Gate(op, targets, controls, (draw(param),))
    return Gate(op, targets, controls)


def random_ansatz(rng, n, param_count):
    """Slots on random rotations, interleaved with fixed and controlled gates.

    Some slots are reused by a second gate so that multi-occurrence
    derivatives are exercised.
    """
    from qlink.variational import Ansatz

    gates = []
    slots = list(range(1, param_count + 1))
    slots += rng.choice(slots, size=param_count // 3).tolist()
    rng.shuffle(slots)
    for k in slots:
        choice = rng.integers(5)
        q = int(rng.integers(n))
        if choice == 0:
            gates.append(Gate((Op.Rx, Op.Ry, Op.Rz)[rng.integers(3)], (q,), params=(Param(k),)))
        elif choice == 1:
            gates.append(Gate(Op.Ph, (q,), params=(Param(k),)))
        else:
            width = int(rng.integers(1, min(3, n) + 1))
            targets = rng.permutation(n)[:width].tolist()
            axes = [("X", "Y", "Z")[i] for i in rng.integers(0, 3, width)]
            gates.append(Gate(Op.R, targets, params=(Param(k),), paulis=axes))
        if rng.random() < 0.5:
            gates.append(random_unitary_gate(rng, n))
    return Ansatz(gates, param_count)


# -- invalid gates and operation sequences --------------------------------------------


def invalid_gate(rng, n, density):
    """A gate that fails validation on an ``n``-qubit register."""
    q = int(rng.integers(n))
    choices = [
        lambda: Gate(Op.X, (n + int(rng.integers(0, 3)),)),
        lambda: Gate(Op.Rx, (q,), params=(float("nan"),)),
        lambda: Gate(Op.U, (q,), matrix=np.array([[1, 1], [0, 1]], dtype=complex)),
        lambda: Gate(Op.Depol, (q,), params=(0.9,)),
        lambda: Gate(Op.Kraus, (q,), kraus=[0.5 * np.eye(2)]),
        lambda: Gate(Op.H, (q,), (q,)),
        lambda: Gate(Op.Rz, (q,), params=(Param(1),)),
    ]
    if not density:
        choices.append(lambda: Gate(Op.Damp, (q,), params=(0.2,)))
    return choices[rng.integers(len(choices))]()


def inject_invalid(rng, circuit, n, density):
    """``(circuit with one invalid gate spliced in, its position)``."""
    pos = int(rng.integers(len(circuit) + 1))
    return circuit[:pos] + [invalid_gate(rng, n, density)] + circuit[pos:], pos


def _fingerprint(value):
    """Bit-exact, comparable form of an API return value."""
    if isinstance(value, np.ndarray):
        return ("array", value.shape, value.dtype.str, value.tobytes())
    if isinstance(value, float):
        return ("float", np.float64(value).tobytes())
    if isinstance(value, complex):
        return ("complex", np.complex128(value).tobytes())
    if isinstance(value, list):
        return ("list", tuple(_fingerprint(v) for v in value))
    return value


def run_random_sequence(env, seed, steps=30):
    """Drive ``env`` through a seeded random mix of API calls.

    Returns one entry per call: the bit-exact result or ``(code, gate_index)``
    of the raised validation error. The choice of call depends only on the
    seed and on values previously returned, so two faithful environments
    produce identical traces.
    """
    from qlink.circuit import PauliString
    from qlink.errors import ValidationError
    from qlink.observables import PauliSum

    rng = np.random.default_rng(seed)
    env.seed(int(seed))
    ids = []
    trace = []

    def some_id():
        if not ids or rng.random() < 0.08:
            return int(rng.integers(1000, 1010))
        return ids[rng.integers(len(ids))]

    def size(q):
        try:
            return env.get_num_qubits(q), env.is_density_matrix(q)
        except ValidationError:
            return 2, False

    def call(name, *args):
        try:
            out = getattr(env, name)(*args)
        except ValidationError as err:
            trace.append((name, "error", err.code, err.gate_index))
            return None
        trace.append((name, _fingerprint(out)))
        return out

    for _ in range(steps):
        op = int(rng.integers(16))
        if op == 0 or not ids:
            q = call("create_qureg", int(rng.integers(1, 5)), bool(rng.random() < 0.4))
            if q is not None:
                ids.append(q)
        elif op == 1:
            q = some_id()
            call("destroy_qureg", q)
            if q in ids:
                ids.remove(q)
        elif op == 2:
            q = some_id()
            n, _ = size(q)
            which = int(rng.integers(5))
            if which == 0:
                call("init_zero", q)
            elif which == 1:
                call("init_plus", q)
            elif which == 2:
                call("init_classical", q, int(rng.integers(0, 2**n + 2)))
            elif which == 3:
                amps = random_state(rng, n) * (1 if rng.random() < 0.8 else 1.5)
                call("init_pure_state", q, amps)
            else:
                call("init_random_pure", q, int(rng.integers(100)))
        elif op in (3, 4, 5):
            q = some_id()
            n, density = size(q)
            circuit = random_circuit(rng, n, int(rng.integers(1, 15)), channels=density, measure=True)
            if rng.random() < 0.3:
                circuit, _ = inject_invalid(rng, circuit, n, density)
            call("apply_circuit", q, circuit)
        elif op == 6:
            q = some_id()
            n, density = size(q)
            call("apply_gate", q, random_unitary_gate(rng, n))
        elif op == 7:
            q = some_id()
            n, _ = size(q)
            call("measure", q, int(rng.integers(0, n + 1)))
        elif op == 8:
            call("get_qureg_matrix", some_id())
        elif op == 9:
            q, w = some_id(), some_id()
            n, _ = size(q)
            factors = tuple(("XYZ"[rng.integers(3)], k) for k in range(n) if rng.random() < 0.6)
            h = PauliSum([(float(rng.normal()), PauliString(factors) if factors else None), (0.5, None)])
            call("calc_expec_pauli_sum", q, h, w)
        elif op == 10:
            call("inner_product", some_id(), some_id())
        elif op == 11:
            call("calc_fidelity", some_id(), some_id())
        elif op == 12:
            q = call("clone_qureg", some_id())
            if q is not None:
                ids.append(q)
        elif op == 13:
            call("copy_qureg", some_id(), some_id())
        elif op == 14:
            f = [complex(*rng.normal(size=2)) for _ in range(3)]
            call("set_weighted_qureg", f[0], some_id(), f[1], some_id(), f[2], some_id())
        else:
            q = some_id()
            n, _ = size(q)
            call("mix_depolarising", q, int(rng.integers(n)), float(rng.uniform(0, 0.8)))
    trace.append(("list_quregs", env.list_quregs()))
    return trace
