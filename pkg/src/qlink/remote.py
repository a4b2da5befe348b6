"""TCP server hosting register environments, and a client mirroring the local API.

Every connection is a session owning a fresh :class:`~qlink.env.Environment`;
its registers vanish when the connection closes. Requests on one connection
are handled strictly in order, each producing one ``RESULT`` or ``ERROR``
frame. Message layouts are listed in ``docs/protocol.md``.
"""

from __future__ import annotations

import logging
import os
import socket
import socketserver
import struct
import threading
from typing import Callable, Sequence

import numpy as np

from qlink.circuit import Circuit
from qlink.env import Environment
from qlink.errors import ErrorCode, ResourceError, TransportError, ValidationError
from qlink.gates import Damp, Deph, Depol, Gate, Kraus
from qlink.observables import PauliSum
from qlink.wire import (
    DEFAULT_PORT,
    HEADER,
    MAGIC,
    PROTOCOL_VERSION,
    InitKind,
    Kind,
    Reader,
    Writer,
    error_body,
    pack_frame,
    parse_error_body,
    recv_exact,
)

log = logging.getLogger(__name__)

MAX_BODY = 1 << 32
ENV_VAR = "QLINK_REMOTE"


# -- server -----------------------------------------------------------------------


def _init_op(env: Environment, r: Reader) -> Writer:
    kind, qureg = r.i64(), r.i64()
    try:
        kind = InitKind(kind)
    except ValueError:
        raise ValidationError(ErrorCode.MALFORMED_MESSAGE, f"unknown init operation {kind}") from None
    if kind is InitKind.ZERO:
        env.init_zero(qureg)
    elif kind is InitKind.PLUS:
        env.init_plus(qureg)
    elif kind is InitKind.CLASSICAL:
        env.init_classical(qureg, r.i64())
    elif kind is InitKind.PURE:
        env.init_pure_state(qureg, r.array())
    else:
        env.init_random_pure(qureg, r.i64())
    return Writer()


def _seed(env: Environment, r: Reader) -> Writer:
    has_value, value = r.i64(), r.i64()
    env.seed(value if has_value else None)
    return Writer()


def _apply_gate(env: Environment, r: Reader) -> Writer:
    qureg, circuit = r.i64(), r.circuit()
    if len(circuit) != 1:
        raise ValidationError(ErrorCode.MALFORMED_MESSAGE, "APPLY_GATE carries exactly one gate")
    outcome = env.apply_gate(qureg, circuit[0])
    return Writer().i64(-1 if outcome is None else outcome)


def _apply_circuit(env, r):
    qureg = r.i64()
    return Writer().ints(env.apply_circuit(qureg, r.circuit()))


def _qureg_info(env, r):
    q = r.i64()
    return Writer().i64(env.get_num_qubits(q)).i64(env.is_density_matrix(q))


def _set_weighted(env, r):
    f1, q1, f2, q2, fo, qo = r.c128(), r.i64(), r.c128(), r.i64(), r.c128(), r.i64()
    env.set_weighted_qureg(f1, q1, f2, q2, fo, qo)
    return Writer()


def _calc_expec(env, r):
    q, h, w = r.i64(), r.pauli_sum(), r.i64()
    return Writer().f64(env.calc_expec_pauli_sum(q, h, w))


def _apply_pauli_sum(env, r):
    q, h, out = r.i64(), r.pauli_sum(), r.i64()
    env.apply_pauli_sum(q, h, out)
    return Writer()


def _set_amps(env, r):
    q = r.i64()
    env.set_qureg_matrix(q, r.array())
    return Writer()


def _none(action: Callable[[], object]) -> Writer:
    action()
    return Writer()


_HANDLERS: dict[Kind, Callable[[Environment, Reader], Writer]] = {
    Kind.PING: lambda env, r: Writer().i64(PROTOCOL_VERSION),
    Kind.CREATE_QUREG: lambda env, r: Writer().i64(env.create_qureg(r.i64(), bool(r.i64()))),
    Kind.DESTROY_QUREG: lambda env, r: _none(lambda: env.destroy_qureg(r.i64())),
    Kind.INIT_OP: _init_op,
    Kind.SET_AMPS: _set_amps,
    Kind.GET_AMPS: lambda env, r: Writer().array(env.get_qureg_matrix(r.i64())),
    Kind.APPLY_CIRCUIT: _apply_circuit,
    Kind.CALC_EXPEC: _calc_expec,
    Kind.INNER_PRODUCT: lambda env, r: Writer().c128(env.inner_product(r.i64(), r.i64())),
    Kind.FIDELITY: lambda env, r: Writer().f64(env.calc_fidelity(r.i64(), r.i64())),
    Kind.DESTROY_ALL: lambda env, r: _none(env.destroy_all_quregs),
    Kind.CLONE_QUREG: lambda env, r: Writer().i64(env.clone_qureg(r.i64())),
    Kind.COPY_QUREG: lambda env, r: _none(lambda: env.copy_qureg(r.i64(), r.i64())),
    Kind.APPLY_PAULI_SUM: _apply_pauli_sum,
    Kind.MEASURE: lambda env, r: Writer().i64(env.measure(r.i64(), r.i64())),
    Kind.LIST_QUREGS: lambda env, r: Writer().ints(env.list_quregs()),
    Kind.SEED: _seed,
    Kind.APPLY_GATE: _apply_gate,
    Kind.QUREG_INFO: _qureg_info,
    Kind.SET_WEIGHTED: _set_weighted,
}


def handle_request(env: Environment, kind: int, body: bytes) -> tuple[Kind, bytes]:
    """Run one request against ``env``; returns the response kind and body."""
    try:
        try:
            handler = _HANDLERS[Kind(kind)]
        except (ValueError, KeyError):
            raise ValidationError(ErrorCode.MALFORMED_MESSAGE, f"unknown message kind {kind}") from None
        r = Reader(body)
        w = handler(env, r)
        r.done()
        return Kind.RESULT, w.bytes()
    except ValidationError as err:
        return Kind.ERROR, error_body(err)
    except (MemoryError, ValueError, TypeError, OverflowError) as err:
        code = ErrorCode.RESOURCE_EXHAUSTED if isinstance(err, MemoryError) else ErrorCode.MALFORMED_MESSAGE
        return Kind.ERROR, error_body(ValidationError(code, str(err)))
    except Exception as err:  # keep the session alive whatever happens
        log.exception("request of kind %s failed", kind)
        return Kind.ERROR, error_body(ValidationError(ErrorCode.INTERNAL, repr(err)))


class _SessionHandler(socketserver.BaseRequestHandler):
    def setup(self):
        self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self.server.track(self.request, True)

    def finish(self):
        self.server.track(self.request, False)

    def _send(self, kind: Kind, body: bytes) -> None:
        self.request.sendall(pack_frame(kind, body))

    def handle(self):
        env = Environment()
        peer = self.client_address
        log.info("session opened for %s", peer)
        try:
            while True:
                header = recv_exact(self.request, HEADER.size)
                if len(header) < HEADER.size:
                    break
                magic, version, kind, length = HEADER.unpack(header)
                if length > self.server.max_body:
                    err = ValidationError(ErrorCode.MALFORMED_MESSAGE, f"body of {length} bytes too large")
                    self._send(Kind.ERROR, error_body(err))
                    break
                body = recv_exact(self.request, length)
                if len(body) < length:
                    break
                if magic != MAGIC:
                    err = ValidationError(ErrorCode.MALFORMED_MESSAGE, f"bad frame magic {magic!r}")
                    self._send(Kind.ERROR, error_body(err))
                    continue
                if version != PROTOCOL_VERSION:
                    err = ValidationError(
                        ErrorCode.PROTOCOL_VERSION_MISMATCH,
                        f"server speaks version {PROTOCOL_VERSION}, client sent {version}",
                    )
                    self._send(Kind.ERROR, error_body(err))
                    break
                self._send(*handle_request(env, kind, body))
        except OSError as err:
            log.info("session for %s ended: %s", peer, err)
        finally:
            env.destroy_all_quregs()
            log.info("session closed for %s", peer)


class Server(socketserver.ThreadingTCPServer):
    """Threaded server with one session per connection.

    ``Server(("127.0.0.1", 0))`` binds an ephemeral port; see :attr:`address`.
    """

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address=("127.0.0.1", DEFAULT_PORT), max_body: int = MAX_BODY):
        super().__init__(address, _SessionHandler)
        self.max_body = max_body
        self._connections: set[socket.socket] = set()
        self._lock = threading.Lock()
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]

    @property
    def session_count(self) -> int:
        with self._lock:
            return len(self._connections)

    def track(self, conn: socket.socket, alive: bool) -> None:
        with self._lock:
            (self._connections.add if alive else self._connections.discard)(conn)

    def start(self) -> Server:
        """Serve from a background daemon thread."""
        self._thread = threading.Thread(target=self.serve_forever, name="qlink-server", daemon=True)
        self._thread.start()
        return self

    def drop_sessions(self) -> None:
        """Forcibly disconnect every client."""
        with self._lock:
            conns = list(self._connections)
        for conn in conns:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass

    def close(self) -> None:
        self.shutdown()
        self.drop_sessions()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve_environment(bind: str = "127.0.0.1", port: int = DEFAULT_PORT) -> None:
    """Run a server in the foreground until interrupted."""
    with Server((bind, port)) as server:
        log.info("serving on %s:%d", *server.address)
        server.serve_forever()


# -- client -------------------------------------------------------------------------


def parse_address(text: str) -> tuple[str, int]:
    """``"host:port"`` or ``"host"`` (default port)."""
    host, sep, port = text.rpartition(":")
    if not sep:
        return text, DEFAULT_PORT
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise ValueError(f"invalid port in address {text!r}") from None


def default_address() -> tuple[str, int] | None:
    value = os.environ.get(ENV_VAR)
    return parse_address(value) if value else None


def _remote_error(body: bytes) -> ValidationError:
    err = parse_error_body(body)
    if err.code is ErrorCode.RESOURCE_EXHAUSTED:
        return ResourceError(err.message, err.gate_index)
    return err


class RemoteEnv:
    """Client handle with the same methods and semantics as :class:`~qlink.env.Environment`.

    Validation failures raise :class:`ValidationError` carrying the server's
    code; socket failures raise :class:`TransportError`. Calls are serialised
    with a lock, so sharing a handle between threads is safe but not parallel.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT, timeout: float | None = 10.0):
        self.host, self.port = host, port
        self._lock = threading.Lock()
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as err:
            raise TransportError(f"cannot connect to {host}:{port}: {err}") from err
        self._sock.settimeout(None)
        self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _call(self, kind: Kind, body: Writer | bytes = b"") -> Reader:
        if isinstance(body, Writer):
            body = body.bytes()
        with self._lock:
            if self._sock is None:
                raise TransportError("connection is closed")
            try:
                self._sock.sendall(pack_frame(kind, body))
                header = recv_exact(self._sock, HEADER.size)
                if len(header) < HEADER.size:
                    raise TransportError("server closed the connection")
                magic, _, reply, length = HEADER.unpack(header)
                if magic != MAGIC:
                    raise TransportError(f"bad frame magic {magic!r} from server")
                payload = recv_exact(self._sock, length)
                if len(payload) < length:
                    raise TransportError("server closed the connection mid-reply")
            except TransportError:
                self.close()
                raise
            except OSError as err:
                self.close()
                raise TransportError(f"connection to {self.host}:{self.port} failed: {err}") from err
        if reply == Kind.ERROR:
            raise _remote_error(payload)
        return Reader(payload)

    @staticmethod
    def _body(fill: Callable[[Writer], object]) -> Writer:
        w = Writer()
        try:
            fill(w)
        except (struct.error, OverflowError, TypeError) as err:
            raise ValidationError(ErrorCode.INVALID_PARAMETER, f"argument cannot be encoded: {err}") from None
        return w

    def ping(self) -> int:
        """Round trip; returns the server's protocol version."""
        return self._call(Kind.PING).i64()

    # mirrored API, in the order of qlink.env.API

    def seed(self, seed: int | None) -> None:
        self._call(Kind.SEED, self._body(lambda w: w.i64(seed is not None).i64(seed or 0)))

    def create_qureg(self, num_qubits: int, density: bool = False) -> int:
        return self._call(
            Kind.CREATE_QUREG, self._body(lambda w: w.i64(num_qubits).i64(bool(density)))
        ).i64()

    def create_density_qureg(self, num_qubits: int) -> int:
        return self.create_qureg(num_qubits, density=True)

    def destroy_qureg(self, qureg: int) -> None:
        self._call(Kind.DESTROY_QUREG, self._body(lambda w: w.i64(qureg)))

    def destroy_all_quregs(self) -> None:
        self._call(Kind.DESTROY_ALL)

    def list_quregs(self) -> list[int]:
        return self._call(Kind.LIST_QUREGS).ints()

    def _info(self, qureg: int) -> tuple[int, bool]:
        r = self._call(Kind.QUREG_INFO, self._body(lambda w: w.i64(qureg)))
        return r.i64(), bool(r.i64())

    def get_num_qubits(self, qureg: int) -> int:
        return self._info(qureg)[0]

    def is_density_matrix(self, qureg: int) -> bool:
        return self._info(qureg)[1]

    def _init(self, kind: InitKind, qureg: int, extra: Callable[[Writer], object] = lambda w: None):
        self._call(Kind.INIT_OP, self._body(lambda w: extra(w.i64(kind).i64(qureg))))

    def init_zero(self, qureg: int) -> None:
        self._init(InitKind.ZERO, qureg)

    def init_plus(self, qureg: int) -> None:
        self._init(InitKind.PLUS, qureg)

    def init_classical(self, qureg: int, index: int) -> None:
        self._init(InitKind.CLASSICAL, qureg, lambda w: w.i64(index))

    def init_pure_state(self, qureg: int, amps: Sequence[complex]) -> None:
        flat = np.asarray(amps, dtype=complex).reshape(-1)
        self._init(InitKind.PURE, qureg, lambda w: w.array(flat))

    def init_random_pure(self, qureg: int, seed: int) -> None:
        self._init(InitKind.RANDOM_PURE, qureg, lambda w: w.i64(seed))

    def set_qureg_matrix(self, qureg: int, data) -> None:
        arr = np.array(data, dtype=complex)
        self._call(Kind.SET_AMPS, self._body(lambda w: w.i64(qureg).array(arr)))

    def get_qureg_matrix(self, qureg: int) -> np.ndarray:
        return self._call(Kind.GET_AMPS, self._body(lambda w: w.i64(qureg))).array()

    def clone_qureg(self, source: int) -> int:
        return self._call(Kind.CLONE_QUREG, self._body(lambda w: w.i64(source))).i64()

    def copy_qureg(self, dest: int, source: int) -> None:
        self._call(Kind.COPY_QUREG, self._body(lambda w: w.i64(dest).i64(source)))

    def set_weighted_qureg(self, fac1, qureg1, fac2, qureg2, fac_out, out) -> None:
        self._call(
            Kind.SET_WEIGHTED,
            self._body(
                lambda w: w.c128(fac1).i64(qureg1).c128(fac2).i64(qureg2).c128(fac_out).i64(out)
            ),
        )

    def apply_gate(self, qureg: int, gate: Gate) -> int | None:
        outcome = self._call(Kind.APPLY_GATE, self._body(lambda w: w.i64(qureg).circuit([gate]))).i64()
        return None if outcome < 0 else outcome

    def apply_circuit(self, qureg: int, circuit: Circuit | Sequence[Gate]) -> list[int]:
        return self._call(
            Kind.APPLY_CIRCUIT, self._body(lambda w: w.i64(qureg).circuit(list(circuit)))
        ).ints()

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

    def measure(self, qureg: int, qubit: int) -> int:
        return self._call(Kind.MEASURE, self._body(lambda w: w.i64(qureg).i64(qubit))).i64()

    def calc_expec_pauli_sum(self, qureg: int, hamil: PauliSum, workspace: int) -> float:
        return self._call(
            Kind.CALC_EXPEC, self._body(lambda w: w.i64(qureg).pauli_sum(hamil).i64(workspace))
        ).f64()

    def apply_pauli_sum(self, qureg_in: int, hamil: PauliSum, qureg_out: int) -> None:
        self._call(
            Kind.APPLY_PAULI_SUM, self._body(lambda w: w.i64(qureg_in).pauli_sum(hamil).i64(qureg_out))
        )

    def inner_product(self, bra: int, ket: int) -> complex:
        return self._call(Kind.INNER_PRODUCT, self._body(lambda w: w.i64(bra).i64(ket))).c128()

    def calc_fidelity(self, qureg: int, pure: int) -> float:
        return self._call(Kind.FIDELITY, self._body(lambda w: w.i64(qureg).i64(pure))).f64()


def connect_environment(
    host: str | None = None, port: int | None = None, timeout: float | None = 10.0
) -> RemoteEnv:
    """Open a session; host and port default to ``$QLINK_REMOTE`` then ``127.0.0.1:55055``."""
    env_host, env_port = default_address() or ("127.0.0.1", DEFAULT_PORT)
    return RemoteEnv(host or env_host, port or env_port, timeout)
