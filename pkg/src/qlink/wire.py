"""Binary encoding of circuits, Pauli sums and protocol frames.

All integers are signed 64-bit and all reals IEEE-754 binary64, little-endian.
A circuit is carried as one 64-bit word per gate, control, target and
parameter, so a circuit with ``Σ`` such elements occupies exactly ``8Σ``
bytes. The per-gate counts are packed into the gate's opcode word::

    bits  0-7   opcode
    bits  8-23  number of controls
    bits 24-39  number of targets
    bits 40-62  number of parameters

Words for one gate are laid out as ``opword, controls..., targets...,
params...``. Targets of an ``R`` gate carry the Pauli axis in bits 32-33
(1 = X, 2 = Y, 3 = Z) above the qubit index. ``U`` parameters are
``[dim, re, im, re, im, ...]`` in row-major order and ``Kraus`` parameters
``[count, dim, entries of each operator...]``. An unbound slot ``θk`` is
carried as the quiet NaN with bit pattern ``0x7FFA_0000_0000_0000 | k`` so
that symbolic circuits travel unchanged and are rejected by the receiver's
validation, in the same order as a local call would reject them. See
``docs/protocol.md``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

import numpy as np

from qlink.circuit import Circuit, PauliString
from qlink.errors import ErrorCode, ValidationError
from qlink.gates import Gate, Op, Param
from qlink.observables import PauliSum

PROTOCOL_VERSION = 1
MAGIC = b"QLNK"
HEADER = struct.Struct("<4sHBQ")
DEFAULT_PORT = 55055

_CTRL_SHIFT, _TARG_SHIFT, _PARAM_SHIFT = 8, 24, 40
_CTRL_MASK, _TARG_MASK, _PARAM_MASK = (1 << 16) - 1, (1 << 16) - 1, (1 << 23) - 1
_AXIS_SHIFT = 32
_QUBIT_MASK = (1 << _AXIS_SHIFT) - 1
_AXIS_CODE = {"X": 1, "Y": 2, "Z": 3}
_CODE_AXIS = {v: k for k, v in _AXIS_CODE.items()}
_SLOT_TAG = 0x7FFA_0000_0000_0000
_SLOT_MASK = (1 << 32) - 1


def _malformed(message: str) -> ValidationError:
    return ValidationError(ErrorCode.MALFORMED_MESSAGE, message)


# -- circuits -------------------------------------------------------------------


@dataclass
class EncodedCircuit:
    """Struct-of-arrays form of a circuit.

    ``targs`` holds the packed target words, so ``R`` axes are included.
    """

    opcodes: np.ndarray
    ctrl_counts: np.ndarray
    ctrls: np.ndarray
    targ_counts: np.ndarray
    targs: np.ndarray
    param_counts: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        for name in ("opcodes", "ctrl_counts", "ctrls", "targ_counts", "targs", "param_counts"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.int64).reshape(-1))
        self.params = np.asarray(self.params, dtype=np.float64).reshape(-1)
        g = len(self.opcodes)
        if not len(self.ctrl_counts) == len(self.targ_counts) == len(self.param_counts) == g:
            raise _malformed("count arrays must have one entry per gate")
        for counts, flat, label in (
            (self.ctrl_counts, self.ctrls, "control"),
            (self.targ_counts, self.targs, "target"),
            (self.param_counts, self.params, "parameter"),
        ):
            if np.any(counts < 0) or counts.sum() != len(flat):
                raise _malformed(f"{label} counts do not match the {label} array")

    @property
    def num_gates(self) -> int:
        return len(self.opcodes)

    @property
    def sigma(self) -> int:
        """Gates plus controls plus targets plus parameters."""
        return self.num_gates + len(self.ctrls) + len(self.targs) + len(self.params)

    def to_bytes(self) -> bytes:
        """Interleaved words; exactly ``8 * sigma`` bytes."""
        out = np.empty(self.sigma, dtype="<i8")
        floats = out.view("<f8")
        pos = c = t = p = 0
        for i in range(self.num_gates):
            nc, nt, np_ = int(self.ctrl_counts[i]), int(self.targ_counts[i]), int(self.param_counts[i])
            for count, limit in ((nc, _CTRL_MASK), (nt, _TARG_MASK), (np_, _PARAM_MASK)):
                if count > limit:
                    raise ValidationError(ErrorCode.INVALID_ARITY, f"gate {i} is too large to encode")
            out[pos] = (
                int(self.opcodes[i])
                | nc << _CTRL_SHIFT
                | nt << _TARG_SHIFT
                | np_ << _PARAM_SHIFT
            )
            pos += 1
            out[pos : pos + nc] = self.ctrls[c : c + nc]
            pos += nc
            out[pos : pos + nt] = self.targs[t : t + nt]
            pos += nt
            floats[pos : pos + np_] = self.params[p : p + np_]
            pos += np_
            c, t, p = c + nc, t + nt, p + np_
        return out.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> EncodedCircuit:
        if len(data) % 8:
            raise _malformed("circuit payload is not a whole number of words")
        words = np.frombuffer(data, dtype="<i8")
        floats = words.view("<f8")
        opcodes, cc, tc, pc = [], [], [], []
        ctrls, targs, params = [], [], []
        pos = 0
        while pos < len(words):
            w = int(words[pos])
            pos += 1
            nc = (w >> _CTRL_SHIFT) & _CTRL_MASK
            nt = (w >> _TARG_SHIFT) & _TARG_MASK
            np_ = (w >> _PARAM_SHIFT) & _PARAM_MASK
            if pos + nc + nt + np_ > len(words) or w < 0:
                raise _malformed(f"gate {len(opcodes)} runs past the end of the payload")
            opcodes.append(w & 0xFF)
            cc.append(nc)
            tc.append(nt)
            pc.append(np_)
            ctrls.append(words[pos : pos + nc])
            pos += nc
            targs.append(words[pos : pos + nt])
            pos += nt
            params.append(floats[pos : pos + np_])
            pos += np_
        cat = lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.empty(0, dt)  # noqa: E731
        return cls(
            opcodes, cc, cat(ctrls, np.int64), tc, cat(targs, np.int64), pc, cat(params, np.float64)
        )


def _matrix_params(m: np.ndarray) -> list[float]:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(ErrorCode.DIMENSION_MISMATCH, f"matrix of shape {m.shape} is not square")
    return np.column_stack([m.real.reshape(-1), m.imag.reshape(-1)]).reshape(-1).tolist()


def _take_matrix(params: np.ndarray, pos: int, dim: int) -> np.ndarray:
    flat = params[pos : pos + 2 * dim * dim]
    if len(flat) != 2 * dim * dim:
        raise _malformed("embedded matrix is truncated")
    # reinterpret the (re, im) pairs so signed zeros survive
    return np.ascontiguousarray(flat, dtype="<f8").view("<c16").astype(complex).reshape(dim, dim)


def _slot_word(p: Param) -> float:
    if not 1 <= p.index <= _SLOT_MASK:
        raise ValidationError(ErrorCode.UNBOUND_PARAMETER, f"slot {p} cannot be encoded")
    return float(np.int64(_SLOT_TAG | p.index).view(np.float64))


def encode_gate_params(gate: Gate) -> list[float]:
    if gate.op is Op.U:
        m = np.asarray(gate.matrix)
        return [float(m.shape[0])] + _matrix_params(m)
    if gate.op is Op.Kraus:
        ops = [np.asarray(k, dtype=complex) for k in gate.kraus]
        dim = ops[0].shape[0] if ops else 0
        if any(k.shape != (dim, dim) for k in ops):
            raise ValidationError(ErrorCode.DIMENSION_MISMATCH, "Kraus operators differ in shape")
        out = [float(len(ops)), float(dim)]
        for k in ops:
            out += _matrix_params(k)
        return out
    return [_slot_word(p) if isinstance(p, Param) else float(p) for p in gate.params]


def _decode_params(params: np.ndarray) -> list:
    words = np.ascontiguousarray(params, dtype="<f8").view("<i8")
    return [
        Param(int(w) & _SLOT_MASK) if int(w) & ~_SLOT_MASK == _SLOT_TAG else float(x)
        for w, x in zip(words, params)
    ]


def encode_circuit(circuit: Circuit | Sequence[Gate]) -> EncodedCircuit:
    """Struct-of-arrays encoding of any well-formed gate list.

    Validity is left to the receiver, except that an ``R`` target outside
    ``[0, 2^32)`` is replaced by ``2^32 - 1``, which no register accepts.
    """
    opcodes, cc, ctrls, tc, targs, pc, params = [], [], [], [], [], [], []
    for i, gate in enumerate(circuit):
        try:
            gp = encode_gate_params(gate)
        except ValidationError as err:
            raise err.at_gate(i) from None
        if gate.op is Op.R:
            words = []
            for axis, q in zip(gate.paulis, gate.targets):
                if not 0 <= q <= _QUBIT_MASK:
                    q = _QUBIT_MASK
                if axis not in _AXIS_CODE:
                    raise ValidationError(ErrorCode.INVALID_PARAMETER, f"unknown Pauli axis {axis!r}", i)
                words.append(q | _AXIS_CODE[axis] << _AXIS_SHIFT)
        else:
            words = list(gate.targets)
        opcodes.append(int(gate.op))
        cc.append(len(gate.controls))
        ctrls += gate.controls
        tc.append(len(words))
        targs += words
        pc.append(len(gp))
        params += gp
    return EncodedCircuit(opcodes, cc, ctrls, tc, targs, pc, params)


def decode_circuit(enc: EncodedCircuit) -> Circuit:
    """Inverse of :func:`encode_circuit`.

    Raises:
        ValidationError: ``UNKNOWN_OPCODE`` or ``MALFORMED_MESSAGE`` tagged
            with the gate index.
    """
    gates = []
    c = t = p = 0
    for i in range(enc.num_gates):
        nc, nt, np_ = int(enc.ctrl_counts[i]), int(enc.targ_counts[i]), int(enc.param_counts[i])
        controls = enc.ctrls[c : c + nc].tolist()
        words = enc.targs[t : t + nt].tolist()
        params = enc.params[p : p + np_]
        c, t, p = c + nc, t + nt, p + np_
        try:
            gates.append(_decode_gate(int(enc.opcodes[i]), controls, words, params))
        except ValidationError as err:
            raise err.at_gate(i) from None
    return Circuit(gates)


def _decode_gate(code: int, controls, words, params) -> Gate:
    try:
        op = Op(code)
    except ValueError:
        raise ValidationError(ErrorCode.UNKNOWN_OPCODE, f"unknown opcode {code}") from None
    if op is Op.R:
        axes, targets = [], []
        for w in words:
            axis = _CODE_AXIS.get(w >> _AXIS_SHIFT)
            if axis is None:
                raise _malformed(f"bad Pauli axis code {w >> _AXIS_SHIFT}")
            axes.append(axis)
            targets.append(w & _QUBIT_MASK)
        return Gate(op, targets, controls, _decode_params(params), paulis=axes)
    if op is Op.U:
        dim = _dimension(params, 0)
        if len(params) != 1 + 2 * dim * dim:
            raise _malformed("U parameter count does not match its dimension")
        return Gate(op, words, controls, matrix=_take_matrix(params, 1, dim))
    if op is Op.Kraus:
        if len(params) < 2:
            raise _malformed("Kraus parameters are truncated")
        count, dim = _dimension(params, 0), _dimension(params, 1)
        size = 2 * dim * dim
        if len(params) != 2 + count * size:
            raise _malformed("Kraus parameter count does not match its header")
        ops = [_take_matrix(params, 2 + k * size, dim) for k in range(count)]
        return Gate(op, words, controls, kraus=ops)
    return Gate(op, words, controls, _decode_params(params))


def _dimension(params: np.ndarray, pos: int) -> int:
    if pos >= len(params):
        raise _malformed("missing matrix header")
    x = params[pos]
    if not (np.isfinite(x) and x == int(x) and 0 <= x <= 1 << 20):
        raise _malformed(f"invalid matrix header {x}")
    return int(x)


def circuit_to_bytes(circuit) -> bytes:
    return encode_circuit(circuit).to_bytes()


def circuit_from_bytes(data: bytes) -> Circuit:
    return decode_circuit(EncodedCircuit.from_bytes(data))


def payload_size(circuit) -> int:
    """Encoded size in bytes."""
    return 8 * encode_circuit(circuit).sigma


def sigma(circuit) -> int:
    """Gates plus controls plus targets plus scalar parameters, counted on the circuit.

    Embedded ``U``/``Kraus`` matrices count by their encoded parameter words.
    """
    total = 0
    for gate in circuit:
        total += 1 + len(gate.controls) + len(gate.targets)
        total += len(encode_gate_params(gate)) if gate.op in (Op.U, Op.Kraus) else len(gate.params)
    return total


# -- frames -----------------------------------------------------------------------


class Kind(IntEnum):
    """Message kinds. Values are part of the protocol."""

    PING = 0
    CREATE_QUREG = 1
    DESTROY_QUREG = 2
    INIT_OP = 3
    SET_AMPS = 4
    GET_AMPS = 5
    APPLY_CIRCUIT = 6
    CALC_EXPEC = 7
    INNER_PRODUCT = 8
    FIDELITY = 9
    ERROR = 10
    RESULT = 11
    DESTROY_ALL = 12
    CLONE_QUREG = 13
    COPY_QUREG = 14
    APPLY_PAULI_SUM = 15
    MEASURE = 16
    LIST_QUREGS = 17
    SEED = 18
    APPLY_GATE = 19
    QUREG_INFO = 20
    SET_WEIGHTED = 21


class InitKind(IntEnum):
    ZERO = 0
    PLUS = 1
    CLASSICAL = 2
    PURE = 3
    RANDOM_PURE = 4


def pack_frame(kind: int, body: bytes = b"", version: int = PROTOCOL_VERSION) -> bytes:
    return HEADER.pack(MAGIC, version, int(kind), len(body)) + body


def unpack_header(data: bytes) -> tuple[bytes, int, int, int]:
    """``(magic, version, kind, body_length)``."""
    return HEADER.unpack(data)


def recv_exact(sock, count: int) -> bytes:
    """Read exactly ``count`` bytes; returns fewer only at end of stream."""
    buf = bytearray()
    while len(buf) < count:
        chunk = sock.recv(min(count - len(buf), 1 << 20))
        if not chunk:
            break
        buf += chunk
    return bytes(buf)


# -- message bodies ----------------------------------------------------------------


class Writer:
    """Appends little-endian fields to a message body."""

    def __init__(self):
        self._parts: list[bytes] = []

    def i64(self, value: int) -> Writer:
        self._parts.append(struct.pack("<q", int(value)))
        return self

    def f64(self, value: float) -> Writer:
        self._parts.append(struct.pack("<d", float(value)))
        return self

    def c128(self, value: complex) -> Writer:
        value = complex(value)
        self._parts.append(struct.pack("<dd", value.real, value.imag))
        return self

    def array(self, data) -> Writer:
        """``ndim``, each extent, then the complex entries row-major."""
        arr = np.ascontiguousarray(data, dtype="<c16")
        self.i64(arr.ndim)
        for extent in arr.shape:
            self.i64(extent)
        self._parts.append(arr.tobytes())
        return self

    def ints(self, values: Sequence[int]) -> Writer:
        self.i64(len(values))
        self._parts.append(np.asarray(values, dtype="<i8").tobytes())
        return self

    def circuit(self, circuit) -> Writer:
        data = circuit_to_bytes(circuit)
        self.i64(len(data) // 8)
        self._parts.append(data)
        return self

    def pauli_sum(self, h: PauliSum) -> Writer:
        """Term count, then per term: coefficient, factor count, packed factors."""
        self.i64(len(h.terms))
        for coeff, string in h.terms:
            self.f64(coeff)
            factors = () if string is None else string.factors
            self.i64(len(factors))
            for axis, q in factors:
                self.i64(q | _AXIS_CODE[axis] << _AXIS_SHIFT)
        return self

    def text(self, value: str) -> Writer:
        self._parts.append(value.encode("utf-8"))
        return self

    def bytes(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    """Consumes fields written by :class:`Writer`; raises ``MALFORMED_MESSAGE`` on truncation."""

    def __init__(self, data: bytes):
        self._data = memoryview(data)
        self._pos = 0

    def _take(self, count: int) -> memoryview:
        if count < 0 or self._pos + count > len(self._data):
            raise _malformed("message body is truncated")
        out = self._data[self._pos : self._pos + count]
        self._pos += count
        return out

    def i64(self) -> int:
        return struct.unpack("<q", self._take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def c128(self) -> complex:
        re, im = struct.unpack("<dd", self._take(16))
        return complex(re, im)

    def array(self) -> np.ndarray:
        ndim = self.i64()
        if not 0 <= ndim <= 8:
            raise _malformed(f"array rank {ndim} not supported")
        shape = tuple(self.i64() for _ in range(ndim))
        if any(s < 0 for s in shape):
            raise _malformed("negative array extent")
        count = int(np.prod(shape, dtype=np.int64))
        return np.frombuffer(self._take(16 * count), dtype="<c16").reshape(shape).astype(complex)

    def ints(self) -> list[int]:
        count = self.i64()
        return np.frombuffer(self._take(8 * count), dtype="<i8").tolist()

    def circuit(self) -> Circuit:
        words = self.i64()
        return circuit_from_bytes(bytes(self._take(8 * words)))

    def pauli_sum(self) -> PauliSum:
        terms = []
        for _ in range(self.i64()):
            coeff = self.f64()
            count = self.i64()
            if count < 0:
                raise _malformed("negative factor count")
            factors = []
            for _ in range(count):
                w = self.i64()
                axis = _CODE_AXIS.get(w >> _AXIS_SHIFT)
                if axis is None:
                    raise _malformed(f"bad Pauli axis code {w >> _AXIS_SHIFT}")
                factors.append((axis, w & _QUBIT_MASK))
            try:
                string = PauliString(tuple(factors)) if factors else None
            except ValueError as err:
                raise _malformed(str(err)) from None
            terms.append((coeff, string))
        return PauliSum(terms)

    def text(self) -> str:
        return bytes(self._take(len(self._data) - self._pos)).decode("utf-8", errors="replace")

    def done(self) -> None:
        if self._pos != len(self._data):
            raise _malformed(f"{len(self._data) - self._pos} unexpected trailing bytes")


def error_body(err: ValidationError) -> bytes:
    index = -1 if err.gate_index is None else err.gate_index
    return Writer().i64(int(err.code)).i64(index).text(err.message).bytes()


def parse_error_body(body: bytes) -> ValidationError:
    r = Reader(body)
    code, index = r.i64(), r.i64()
    message = r.text()
    try:
        code = ErrorCode(code)
    except ValueError:
        code = ErrorCode.INTERNAL
    return ValidationError(code, message, None if index < 0 else index)

